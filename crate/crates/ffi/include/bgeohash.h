#ifndef BGEOHASH_H
#define BGEOHASH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BghStatus {
  BGH_STATUS_OK = 0,
  BGH_STATUS_NULL_POINTER = 1,
  BGH_STATUS_INVALID_ARGUMENT = 2,
  /*
   Coordinate outside its half-open range or not finite.
   */
  BGH_STATUS_DOMAIN = 3,
  BGH_STATUS_IO = 4,
  /*
   Malformed or corrupted model bytes.
   */
  BGH_STATUS_FORMAT = 5,
  /*
   No positive-weight points to fit.
   */
  BGH_STATUS_FIT = 6,
  /*
   Output buffer too small; nothing was written.
   */
  BGH_STATUS_BUFFER_TOO_SMALL = 7,
  BGH_STATUS_PANIC = 8,
} BghStatus;

/*
 Fitted balanced model.
 */
typedef struct BghModel BghModel;

typedef struct BghWeightedPoint {
  double lat;
  double lon;
  uint64_t weight;
} BghWeightedPoint;

/*
 `bits` leading hash bits, right-aligned in `code`.
 */
typedef struct BghHashCode {
  uint64_t code;
  uint8_t bits;
} BghHashCode;

/*
 Half-open interval of raw 63-bit fractions.
 */
typedef struct BghInterval {
  uint64_t start;
  uint64_t end;
} BghInterval;

/*
 Fits a depth-`q` model on `n` weighted points.

 # Safety
 `points` must address `n` readable elements (or be null when `n == 0`);
 `out` must be writable.
 */
enum BghStatus bgh_model_fit(const struct BghWeightedPoint *points,
                             size_t n,
                             uint8_t q,
                             struct BghModel **out);

/*
 Loads a model file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BghStatus bgh_model_load(const char *path, struct BghModel **out);

/*
 Parses a model from its serialized bytes.

 # Safety
 `data` must address `len` readable bytes; `out` must be writable.
 */
enum BghStatus bgh_model_load_bytes(const uint8_t *data, size_t len, struct BghModel **out);

/*
 Writes a model file atomically.

 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
enum BghStatus bgh_model_save(const struct BghModel *model, const char *path);

/*
 Serializes a model into `buf`. `len_out` always receives the required size,
 so a call with `cap == 0` queries it.

 # Safety
 `model` must be a live handle, `buf` must address `cap` writable bytes
 (may be null when `cap == 0`), and `len_out` must be writable.
 */
enum BghStatus bgh_model_to_bytes(const struct BghModel *model,
                                  uint8_t *buf,
                                  size_t cap,
                                  size_t *len_out);

/*
 Releases a model handle. Null is ignored.

 # Safety
 `model` must be null or a handle not yet freed.
 */
void bgh_model_free(struct BghModel *model);

/*
 Balance depth `q`; 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
uint8_t bgh_model_depth(const struct BghModel *model);

/*
 Standard `bits`-bit geohash of a coordinate.

 # Safety
 `out` must be writable.
 */
enum BghStatus bgh_encode(double lat, double lon, uint8_t bits, struct BghHashCode *out);

/*
 Balanced `bits`-bit geohash of a coordinate.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum BghStatus bgh_balanced_encode(const struct BghModel *model,
                                   double lat,
                                   double lon,
                                   uint8_t bits,
                                   struct BghHashCode *out);

/*
 Standard-hash interval whose points encode to `code`.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum BghStatus bgh_balanced_decode(const struct BghModel *model,
                                   struct BghHashCode code,
                                   struct BghInterval *out);

/*
 Shannon entropy in bits of a histogram.

 # Safety
 `counts` must address `n` readable elements; `out` must be writable.
 */
enum BghStatus bgh_entropy(const uint64_t *counts, size_t n, double *out);

/*
 Entropy threshold and the probability that a depth-`q` model fitted on `n`
 unique points reaches it.

 # Safety
 `threshold` and `probability` must be writable.
 */
enum BghStatus bgh_theorem_bound(uint32_t q,
                                 uint64_t n,
                                 double a,
                                 double *threshold,
                                 double *probability);

/*
 NUL-terminated base-32 text of a code whose length is a multiple of 5.

 # Safety
 `buf` must address `cap` writable bytes.
 */
enum BghStatus bgh_render_base32(struct BghHashCode code, char *buf, size_t cap);

/*
 NUL-terminated spatiotemporal key of a point at epoch second `t`.

 # Safety
 `model` must be a live handle; `buf` must address `cap` writable bytes.
 */
enum BghStatus bgh_stkey(const struct BghModel *model,
                         uint8_t prefix_bits,
                         uint64_t resolution,
                         uint8_t suffix_bits,
                         double lat,
                         double lon,
                         int64_t t,
                         char *buf,
                         size_t cap);

/*
 Copies the calling thread's last error message into `buf`, truncating to
 fit, and returns the untruncated length excluding the terminator.

 # Safety
 `buf` must be null or address `cap` writable bytes.
 */
size_t bgh_last_error_message(char *buf, size_t cap);

#endif  /* BGEOHASH_H */
