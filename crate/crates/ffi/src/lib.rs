//! C ABI over the `bgeohash` library.
//!
//! Every fallible function returns a [`BghStatus`]; on failure the message
//! of the most recent error on the calling thread is available through
//! [`bgh_last_error_message`]. Models are opaque heap handles owned by the
//! caller and released with [`bgh_model_free`]. Balanced and standard hash
//! values cross the boundary as raw 63-bit fractions (`value · 2^63`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bgeohash::{geohash, BalancedModel, Error, GeoPoint, HashCode, StKeyConfig, WeightedPoint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BghStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Coordinate outside its half-open range or not finite.
    Domain = 3,
    Io = 4,
    /// Malformed or corrupted model bytes.
    Format = 5,
    /// No positive-weight points to fit.
    Fit = 6,
    /// Output buffer too small; nothing was written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// Fitted balanced model.
pub struct BghModel {
    inner: BalancedModel,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BghWeightedPoint {
    pub lat: f64,
    pub lon: f64,
    pub weight: u64,
}

/// `bits` leading hash bits, right-aligned in `code`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BghHashCode {
    pub code: u64,
    pub bits: u8,
}

/// Half-open interval of raw 63-bit fractions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BghInterval {
    pub start: u64,
    pub end: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BghStatus {
    match e {
        Error::Domain { .. } => BghStatus::Domain,
        Error::Argument(_) | Error::Parse { .. } => BghStatus::InvalidArgument,
        Error::Fit(_) => BghStatus::Fit,
        Error::Load { .. } | Error::Csv { .. } | Error::Json(_) => BghStatus::Format,
        Error::File { .. } | Error::Io(_) => BghStatus::Io,
    }
}

struct Failure(BghStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BghStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for [`bgh_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BghStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BghStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BghStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const BghModel) -> Result<&'a BalancedModel, Failure> {
    // SAFETY: caller passes a live handle or null.
    unsafe { model.as_ref() }
        .map(|m| &m.inner)
        .ok_or_else(|| null("model"))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(path) }
        .to_str()
        .map_err(|_| Failure(BghStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

fn code_arg(code: BghHashCode) -> Result<HashCode, Failure> {
    Ok(HashCode::new(code.code, code.bits)?)
}

fn code_out(code: HashCode) -> BghHashCode {
    BghHashCode {
        code: code.code(),
        bits: code.bits(),
    }
}

/// Copies `s` plus a NUL terminator into `buf`, or fails without writing.
unsafe fn write_cstr(s: &str, buf: *mut c_char, cap: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if s.len() + 1 > cap {
        return Err(Failure(
            BghStatus::BufferTooSmall,
            format!("need {} bytes, have {cap}", s.len() + 1),
        ));
    }
    // SAFETY: buf holds at least cap >= len + 1 writable bytes.
    unsafe {
        std::ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
        *buf.add(s.len()) = 0;
    }
    Ok(())
}

fn boxed(model: BalancedModel) -> *mut BghModel {
    Box::into_raw(Box::new(BghModel { inner: model }))
}

/// Fits a depth-`q` model on `n` weighted points.
///
/// # Safety
/// `points` must address `n` readable elements (or be null when `n == 0`);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_fit(
    points: *const BghWeightedPoint,
    n: usize,
    q: u8,
    out: *mut *mut BghModel,
) -> BghStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let slice = if n == 0 {
            &[][..]
        } else if points.is_null() {
            return Err(null("points"));
        } else {
            // SAFETY: caller guarantees n readable elements.
            unsafe { std::slice::from_raw_parts(points, n) }
        };
        let pts = slice
            .iter()
            .map(|p| Ok(WeightedPoint::new(GeoPoint::new(p.lat, p.lon)?, p.weight)))
            .collect::<Result<Vec<_>, Error>>()?;
        let model = BalancedModel::fit(&pts, q)?;
        // SAFETY: checked non-null above.
        unsafe { *out = boxed(model) };
        Ok(())
    })
}

/// Loads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_load(path: *const c_char, out: *mut *mut BghModel) -> BghStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = BalancedModel::load(unsafe { path_arg(path)? })?;
        unsafe { *out = boxed(model) };
        Ok(())
    })
}

/// Parses a model from its serialized bytes.
///
/// # Safety
/// `data` must address `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_load_bytes(
    data: *const u8,
    len: usize,
    out: *mut *mut BghModel,
) -> BghStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        // SAFETY: caller guarantees len readable bytes.
        let bytes = unsafe { std::slice::from_raw_parts(data, len) };
        let model = BalancedModel::from_bytes(bytes)?;
        unsafe { *out = boxed(model) };
        Ok(())
    })
}

/// Writes a model file atomically.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_save(model: *const BghModel, path: *const c_char) -> BghStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        model.save(unsafe { path_arg(path)? })?;
        Ok(())
    })
}

/// Serializes a model into `buf`. `len_out` always receives the required size,
/// so a call with `cap == 0` queries it.
///
/// # Safety
/// `model` must be a live handle, `buf` must address `cap` writable bytes
/// (may be null when `cap == 0`), and `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_to_bytes(
    model: *const BghModel,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> BghStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if len_out.is_null() {
            return Err(null("len_out"));
        }
        let bytes = model.to_bytes();
        unsafe { *len_out = bytes.len() };
        if bytes.len() > cap {
            return Err(Failure(
                BghStatus::BufferTooSmall,
                format!("need {} bytes, have {cap}", bytes.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        // SAFETY: buf holds cap >= len writable bytes.
        unsafe { std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len()) };
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_free(model: *mut BghModel) {
    if !model.is_null() {
        // SAFETY: handle came from Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Balance depth `q`; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bgh_model_depth(model: *const BghModel) -> u8 {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.depth())
}

/// Standard `bits`-bit geohash of a coordinate.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_encode(
    lat: f64,
    lon: f64,
    bits: u8,
    out: *mut BghHashCode,
) -> BghStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let code = geohash::encode(&GeoPoint::new(lat, lon)?.to_unit()?, bits)?;
        unsafe { *out = code_out(code) };
        Ok(())
    })
}

/// Balanced `bits`-bit geohash of a coordinate.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_balanced_encode(
    model: *const BghModel,
    lat: f64,
    lon: f64,
    bits: u8,
    out: *mut BghHashCode,
) -> BghStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let code = model.encode(&GeoPoint::new(lat, lon)?, bits)?;
        unsafe { *out = code_out(code) };
        Ok(())
    })
}

/// Standard-hash interval whose points encode to `code`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_balanced_decode(
    model: *const BghModel,
    code: BghHashCode,
    out: *mut BghInterval,
) -> BghStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let iv = model.decode(&code_arg(code)?);
        unsafe {
            *out = BghInterval {
                start: iv.start.raw(),
                end: iv.end.raw(),
            }
        };
        Ok(())
    })
}

/// Shannon entropy in bits of a histogram.
///
/// # Safety
/// `counts` must address `n` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_entropy(counts: *const u64, n: usize, out: *mut f64) -> BghStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let counts = if n == 0 {
            &[][..]
        } else if counts.is_null() {
            return Err(null("counts"));
        } else {
            unsafe { std::slice::from_raw_parts(counts, n) }
        };
        let h = bgeohash::entropy(counts)?;
        unsafe { *out = h };
        Ok(())
    })
}

/// Entropy threshold and the probability that a depth-`q` model fitted on `n`
/// unique points reaches it.
///
/// # Safety
/// `threshold` and `probability` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgh_theorem_bound(
    q: u32,
    n: u64,
    a: f64,
    threshold: *mut f64,
    probability: *mut f64,
) -> BghStatus {
    guard(|| {
        if threshold.is_null() || probability.is_null() {
            return Err(null("output"));
        }
        let b = bgeohash::theorem_bound(q, n, a)?;
        unsafe {
            *threshold = b.threshold;
            *probability = b.probability_lower_bound;
        }
        Ok(())
    })
}

/// NUL-terminated base-32 text of a code whose length is a multiple of 5.
///
/// # Safety
/// `buf` must address `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bgh_render_base32(
    code: BghHashCode,
    buf: *mut c_char,
    cap: usize,
) -> BghStatus {
    guard(|| {
        let text = geohash::render_base32(&code_arg(code)?)?;
        unsafe { write_cstr(&text, buf, cap) }
    })
}

/// NUL-terminated spatiotemporal key of a point at epoch second `t`.
///
/// # Safety
/// `model` must be a live handle; `buf` must address `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bgh_stkey(
    model: *const BghModel,
    prefix_bits: u8,
    resolution: u64,
    suffix_bits: u8,
    lat: f64,
    lon: f64,
    t: i64,
    buf: *mut c_char,
    cap: usize,
) -> BghStatus {
    guard(|| {
        let model = unsafe { model_ref(model)? };
        let config = StKeyConfig::new(prefix_bits, resolution, suffix_bits)?;
        let key = bgeohash::make_key(&config, model, &GeoPoint::new(lat, lon)?, t)?;
        unsafe { write_cstr(&key.to_string(), buf, cap) }
    })
}

/// Copies the calling thread's last error message into `buf`, truncating to
/// fit, and returns the untruncated length excluding the terminator.
///
/// # Safety
/// `buf` must be null or address `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bgh_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            // SAFETY: n + 1 <= cap bytes are writable.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}
