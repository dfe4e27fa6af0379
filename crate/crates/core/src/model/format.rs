//! Binary model file.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `BGH1`                           |
//! | 4      | 1    | version (1)                            |
//! | 5      | 1    | depth `q`                              |
//! | 6      | 2    | reserved, zero                         |
//! | 8      | 8    | distinct points `N`                    |
//! | 16     | 8    | total weight `W`                       |
//! | 24     | 8·(2^q+1) | breakpoints, numerators over 2^63 |
//! | end-4  | 4    | CRC-32 (ISO-HDLC) of all prior bytes   |

use std::io::{Read, Write};
use std::path::Path;

use super::{BalancedModel, MAX_DEPTH};
use crate::error::{Error, LoadCheck, Result};
use crate::fixed::Fix63;

pub const MAGIC: &[u8; 4] = b"BGH1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;

/// Size in bytes of the file for a depth-`q` model.
pub const fn encoded_len(q: u8) -> usize {
    HEADER_LEN + ((1usize << q) + 1) * 8 + 4
}

impl BalancedModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(encoded_len(self.depth));
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.depth);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.n_points.to_le_bytes());
        out.extend_from_slice(&self.total_weight.to_le_bytes());
        for s in &self.breakpoints {
            out.extend_from_slice(&s.raw().to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<BalancedModel> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(Error::load(
                LoadCheck::Length,
                format!("{} bytes is shorter than a header", bytes.len()),
            ));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::load(
                LoadCheck::Magic,
                format!("found {:02x?}", &bytes[0..4]),
            ));
        }
        if bytes[4] != VERSION {
            return Err(Error::load(
                LoadCheck::Version,
                format!("unsupported version {}", bytes[4]),
            ));
        }
        let q = bytes[5];
        if q == 0 || q > MAX_DEPTH {
            return Err(Error::load(
                LoadCheck::Depth,
                format!("depth {q} not in 1..={MAX_DEPTH}"),
            ));
        }
        let expected = encoded_len(q);
        if bytes.len() != expected {
            return Err(Error::load(
                LoadCheck::Length,
                format!("{} bytes, expected {expected} for depth {q}", bytes.len()),
            ));
        }
        let (body, tail) = bytes.split_at(expected - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::load(
                LoadCheck::Checksum,
                format!("stored {stored:08x}, computed {actual:08x}"),
            ));
        }
        if bytes[6..8] != [0, 0] {
            return Err(Error::load(
                LoadCheck::Reserved,
                "reserved bytes must be zero",
            ));
        }
        let word =
            |at: usize| u64::from_le_bytes(body[at..at + 8].try_into().expect("8-byte word"));
        let n_points = word(8);
        let total_weight = word(16);
        let breakpoints = (HEADER_LEN..body.len())
            .step_by(8)
            .map(|at| {
                let raw = word(at);
                if raw > Fix63::ONE.raw() {
                    Err(Error::load(
                        LoadCheck::Endpoints,
                        format!("breakpoint {raw:#x} above one"),
                    ))
                } else {
                    Ok(Fix63::from_raw(raw))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let model = BalancedModel {
            depth: q,
            breakpoints,
            n_points,
            total_weight,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<BalancedModel> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<BalancedModel> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// Writes the model atomically (temporary file, then rename).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Fix63;

    fn sample_model(q: u8) -> BalancedModel {
        let samples = (1..500u64)
            .map(|k| (Fix63::from_raw((k * k * 1_000_003) << 20), k % 3))
            .collect();
        BalancedModel::fit_hash_values(samples, q).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample_model(8);
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 2084);
        assert_eq!(BalancedModel::from_bytes(&bytes).unwrap(), m);
    }

    fn check_of(bytes: &[u8]) -> LoadCheck {
        match BalancedModel::from_bytes(bytes) {
            Err(Error::Load { check, .. }) => check,
            other => panic!("expected a load error, got {other:?}"),
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample_model(3).to_bytes();

        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 9] ^= 0x40;
        assert_eq!(check_of(&flipped), LoadCheck::Checksum);

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert_eq!(check_of(&magic), LoadCheck::Magic);

        let mut version = bytes.clone();
        version[4] = 2;
        assert_eq!(check_of(&version), LoadCheck::Version);

        assert_eq!(check_of(&bytes[..bytes.len() - 1]), LoadCheck::Length);
        assert_eq!(check_of(&bytes[..10]), LoadCheck::Length);
    }

    #[test]
    fn invariant_violations_with_valid_checksum_are_rejected() {
        let m = BalancedModel::identity(2).unwrap();
        let mut bytes = m.to_bytes();
        // swap breakpoints 1 and 2, then re-seal
        let (a, b) = (HEADER_LEN + 8, HEADER_LEN + 16);
        let tmp: Vec<u8> = bytes[a..a + 8].to_vec();
        bytes.copy_within(b..b + 8, a);
        bytes[b..b + 8].copy_from_slice(&tmp);
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(check_of(&bytes), LoadCheck::Monotonicity);
    }
}
