//! Spatiotemporal row keys: `prefix ‖ time bucket ‖ suffix`.
//!
//! Text layout is `<hex prefix>:<12-digit decimal bucket>:<hex suffix>`. All
//! three fields have fixed width for a given configuration, so byte-wise
//! comparison of rendered keys matches tuple order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geohash::{GeoPoint, HashCode, UnitPoint};
use crate::model::BalancedModel;

/// Decimal digits of the time-bucket field.
pub const TIME_DIGITS: usize = 12;

/// Largest representable time bucket.
pub const MAX_TIME_BUCKET: u64 = 999_999_999_999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StKeyConfig {
    /// Hash bits placed before the time bucket; multiple of 4 in `4..=40`.
    pub prefix_bits: u8,
    /// Seconds per time bucket.
    pub time_resolution: u64,
    /// Hash bits placed after the time bucket; multiple of 4, `prefix + suffix ≤ 60`.
    pub suffix_bits: u8,
}

impl StKeyConfig {
    pub fn new(prefix_bits: u8, time_resolution: u64, suffix_bits: u8) -> Result<StKeyConfig> {
        let cfg = StKeyConfig {
            prefix_bits,
            time_resolution,
            suffix_bits,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.prefix_bits;
        let s = self.suffix_bits;
        if !p.is_multiple_of(4) || !(4..=40).contains(&p) {
            return Err(Error::arg(format!(
                "prefix bits {p} must be a multiple of 4 in 4..=40"
            )));
        }
        if !s.is_multiple_of(4) || p as u32 + s as u32 > 60 {
            return Err(Error::arg(format!(
                "suffix bits {s} must be a multiple of 4 with prefix + suffix <= 60"
            )));
        }
        if self.time_resolution == 0 {
            return Err(Error::arg("time resolution must be positive"));
        }
        Ok(())
    }

    pub fn total_bits(&self) -> u8 {
        self.prefix_bits + self.suffix_bits
    }

    /// Rendered key length in bytes.
    pub fn key_len(&self) -> usize {
        (self.prefix_bits / 4) as usize + 1 + TIME_DIGITS + 1 + (self.suffix_bits / 4) as usize
    }

    /// Bucket index of an epoch time; pre-1970 times are rejected.
    pub fn time_bucket(&self, t: i64) -> Result<u64> {
        if t < 0 {
            return Err(Error::arg(format!("time {t} precedes the epoch")));
        }
        let bucket = t as u64 / self.time_resolution;
        if bucket > MAX_TIME_BUCKET {
            return Err(Error::arg(format!(
                "time bucket {bucket} exceeds {TIME_DIGITS} digits"
            )));
        }
        Ok(bucket)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StKey {
    pub prefix: HashCode,
    pub time_bucket: u64,
    pub suffix: Option<HashCode>,
}

impl StKey {
    /// Concatenated prefix and suffix bits.
    pub fn spatial_code(&self) -> HashCode {
        match self.suffix {
            None => self.prefix,
            Some(s) => HashCode::new(
                (self.prefix.code() << s.bits()) | s.code(),
                self.prefix.bits() + s.bits(),
            )
            .expect("prefix and suffix fit in 60 bits"),
        }
    }

    pub fn parse(text: &str) -> Result<StKey> {
        let mut fields = text.split(':');
        let (Some(prefix), Some(time), Some(suffix), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Parse {
                position: 0,
                message: "expected <prefix>:<time>:<suffix>".into(),
            });
        };
        let prefix = parse_hex(prefix, 0)?.ok_or_else(|| Error::Parse {
            position: 0,
            message: "empty prefix".into(),
        })?;
        let time_at = prefix.bits() as usize / 4 + 1;
        if time.len() != TIME_DIGITS || !time.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse {
                position: time_at,
                message: format!("time bucket must be {TIME_DIGITS} decimal digits"),
            });
        }
        let time_bucket = time.parse().expect("validated digits");
        let suffix = parse_hex(suffix, time_at + TIME_DIGITS + 1)?;
        if prefix.bits() as u32 + suffix.map_or(0, |s| s.bits() as u32) > 60 {
            return Err(Error::arg("key holds more than 60 hash bits"));
        }
        Ok(StKey {
            prefix,
            time_bucket,
            suffix,
        })
    }
}

fn parse_hex(s: &str, offset: usize) -> Result<Option<HashCode>> {
    if s.is_empty() {
        return Ok(None);
    }
    if s.len() > 15 {
        return Err(Error::Parse {
            position: offset,
            message: "hex field longer than 60 bits".into(),
        });
    }
    let mut code = 0u64;
    for (i, c) in s.bytes().enumerate() {
        let digit = match c {
            b'0'..=b'9' => c - b'0',
            b'a'..=b'f' => c - b'a' + 10,
            _ => {
                return Err(Error::Parse {
                    position: offset + i,
                    message: format!("invalid hex character {:?}", c as char),
                })
            }
        };
        code = (code << 4) | digit as u64;
    }
    Ok(Some(HashCode::new(code, 4 * s.len() as u8)?))
}

pub(crate) fn hex_field(code: u64, bits: u8) -> String {
    format!("{:0width$x}", code, width = (bits / 4) as usize)
}

impl fmt::Display for StKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{:0td$}:",
            hex_field(self.prefix.code(), self.prefix.bits()),
            self.time_bucket,
            td = TIME_DIGITS
        )?;
        if let Some(s) = self.suffix {
            f.write_str(&hex_field(s.code(), s.bits()))?;
        }
        Ok(())
    }
}

/// Key of a point observed at epoch second `t`.
pub fn make_key(
    config: &StKeyConfig,
    model: &BalancedModel,
    p: &GeoPoint,
    t: i64,
) -> Result<StKey> {
    make_key_unit(config, model, &p.to_unit()?, t)
}

pub fn make_key_unit(
    config: &StKeyConfig,
    model: &BalancedModel,
    u: &UnitPoint,
    t: i64,
) -> Result<StKey> {
    config.validate()?;
    let time_bucket = config.time_bucket(t)?;
    let code = model.encode_unit(u, config.total_bits())?;
    let s = config.suffix_bits;
    let prefix = HashCode::new(code.code() >> s, config.prefix_bits)?;
    let suffix = if s == 0 {
        None
    } else {
        Some(HashCode::new(code.code() & ((1u64 << s) - 1), s)?)
    };
    Ok(StKey {
        prefix,
        time_bucket,
        suffix,
    })
}
