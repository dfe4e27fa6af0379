//! Standard geohash on exact fixed-point coordinates.
//!
//! Coordinates are mapped to the unit square with `x = (lon + 180) / 360` and
//! `y = (lat + 90) / 180`, each held as a 60-bit binary fraction obtained by
//! exact integer arithmetic (the conversion floors the true real value, never
//! the rounded double). The hash interleaves the binary digits of `x` and
//! `y`, longitude first, most significant bit first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::Fix63;

/// Maximum hash precision in bits.
pub const MAX_BITS: u8 = 60;

/// Number of fractional bits carried by each unit-square coordinate.
pub const UNIT_BITS: u32 = 60;

const UNIT_ONE: u64 = 1 << UNIT_BITS;

/// Conventional geohash alphabet.
pub const BASE32_ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Fractional digits accepted by the exact decimal parser.
pub const MAX_DECIMAL_DIGITS: usize = 18;

/// Latitude/longitude in degrees. `lat ∈ [-90, 90)`, `lon ∈ [-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<GeoPoint> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !(-90.0..90.0).contains(&self.lat) {
            return Err(Error::Domain {
                field: "lat",
                value: self.lat.to_string(),
            });
        }
        if !self.lon.is_finite() || !(-180.0..180.0).contains(&self.lon) {
            return Err(Error::Domain {
                field: "lon",
                value: self.lon.to_string(),
            });
        }
        Ok(())
    }

    pub fn to_unit(&self) -> Result<UnitPoint> {
        to_unit(self)
    }
}

/// Point of the unit square as two 60-bit fractions (`value = raw / 2^60`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitPoint {
    x: u64,
    y: u64,
}

impl UnitPoint {
    pub fn from_raw(x: u64, y: u64) -> Result<UnitPoint> {
        if x >= UNIT_ONE {
            return Err(Error::Domain {
                field: "x",
                value: x.to_string(),
            });
        }
        if y >= UNIT_ONE {
            return Err(Error::Domain {
                field: "y",
                value: y.to_string(),
            });
        }
        Ok(UnitPoint { x, y })
    }

    /// Exact conversion from decimal text, e.g. `("57.64911", "10.40744")`.
    pub fn from_decimal(lat: &str, lon: &str) -> Result<UnitPoint> {
        let lat = Decimal::parse(lat)?;
        let lon = Decimal::parse(lon)?;
        Ok(UnitPoint {
            x: lon.unit_floor("lon", 180)?,
            y: lat.unit_floor("lat", 90)?,
        })
    }

    pub fn x_raw(&self) -> u64 {
        self.x
    }

    pub fn y_raw(&self) -> u64 {
        self.y
    }

    pub fn x(&self) -> f64 {
        self.x as f64 / UNIT_ONE as f64
    }

    pub fn y(&self) -> f64 {
        self.y as f64 / UNIT_ONE as f64
    }
}

/// The top `bits` interleaved bits of a (generalized) geohash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HashCode {
    code: u64,
    bits: u8,
}

impl HashCode {
    pub fn new(code: u64, bits: u8) -> Result<HashCode> {
        check_bits(bits)?;
        if code >> bits != 0 {
            return Err(Error::arg(format!(
                "code {code:#x} does not fit in {bits} bits"
            )));
        }
        Ok(HashCode { code, bits })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Result<HashCode> {
        if s.is_empty() || s.len() > MAX_BITS as usize {
            return Err(Error::arg(format!(
                "bit string length {} not in 1..=60",
                s.len()
            )));
        }
        let mut code = 0u64;
        for (i, c) in s.bytes().enumerate() {
            code = (code << 1)
                | match c {
                    b'0' => 0,
                    b'1' => 1,
                    _ => {
                        return Err(Error::Parse {
                            position: i,
                            message: format!("invalid bit character {:?}", c as char),
                        })
                    }
                };
        }
        Ok(HashCode {
            code,
            bits: s.len() as u8,
        })
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    /// `code / 2^bits` as a double (exact for every valid code).
    pub fn value(&self) -> f64 {
        self.code as f64 / (1u64 << self.bits) as f64
    }

    /// Start of the hash interval this prefix denotes.
    pub fn start(&self) -> Fix63 {
        Fix63::from_raw(self.code << (63 - self.bits as u32))
    }

    /// Exclusive end of the hash interval this prefix denotes.
    pub fn end(&self) -> Fix63 {
        Fix63::from_raw((self.code + 1) << (63 - self.bits as u32))
    }

    /// The first `bits` bits of this code.
    pub fn prefix(&self, bits: u8) -> Result<HashCode> {
        if bits == 0 || bits > self.bits {
            return Err(Error::arg(format!(
                "prefix length {bits} not in 1..={}",
                self.bits
            )));
        }
        Ok(HashCode {
            code: self.code >> (self.bits - bits),
            bits,
        })
    }

    pub fn is_prefix_of(&self, other: &HashCode) -> bool {
        self.bits <= other.bits && other.code >> (other.bits - self.bits) == self.code
    }
}

impl fmt::Display for HashCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.code, width = self.bits as usize)
    }
}

/// Latitude/longitude rectangle `[lat_min, lat_max) × [lon_min, lon_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRect {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl CellRect {
    pub const WORLD: CellRect = CellRect {
        lat_min: -90.0,
        lat_max: 90.0,
        lon_min: -180.0,
        lon_max: 180.0,
    };

    /// A query rectangle; bounds may touch the closed domain edges.
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<CellRect> {
        let r = CellRect {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lat_min, self.lat_max, self.lon_min, self.lon_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("rectangle has a non-finite bound"));
        }
        if !(self.lat_min < self.lat_max && self.lon_min < self.lon_max) {
            return Err(Error::arg(format!("empty rectangle {self:?}")));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 {
            return Err(Error::Domain {
                field: "lat",
                value: format!("[{}, {})", self.lat_min, self.lat_max),
            });
        }
        if self.lon_min < -180.0 || self.lon_max > 180.0 {
            return Err(Error::Domain {
                field: "lon",
                value: format!("[{}, {})", self.lon_min, self.lon_max),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.lat_min..self.lat_max).contains(&p.lat)
            && (self.lon_min..self.lon_max).contains(&p.lon)
    }

    pub fn contains_rect(&self, other: &CellRect) -> bool {
        self.lat_min <= other.lat_min
            && other.lat_max <= self.lat_max
            && self.lon_min <= other.lon_min
            && other.lon_max <= self.lon_max
    }

    pub fn area_deg2(&self) -> f64 {
        (self.lat_max - self.lat_min) * (self.lon_max - self.lon_min)
    }
}

fn check_bits(bits: u8) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::arg(format!("bit count {bits} not in 1..=60")));
    }
    Ok(())
}

/// Maps a coordinate into the unit square with 60 exact binary digits.
pub fn to_unit(p: &GeoPoint) -> Result<UnitPoint> {
    p.validate()?;
    Ok(UnitPoint {
        x: lon_to_unit_floor(p.lon),
        y: lat_to_unit_floor(p.lat),
    })
}

/// `floor(v · 2^64)` computed exactly from the IEEE-754 representation.
/// Requires `|v| < 2^9`.
fn scaled_floor(v: f64) -> i128 {
    if v == 0.0 {
        return 0;
    }
    let bits = v.to_bits();
    let negative = bits >> 63 == 1;
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = if negative {
        -(mant as i128)
    } else {
        mant as i128
    };
    let shift = e + 64;
    if shift >= 0 {
        m << shift
    } else if shift <= -127 {
        if negative {
            -1
        } else {
            0
        }
    } else {
        // arithmetic shift floors for negative values
        m >> (-shift)
    }
}

fn scaled_ceil(v: f64) -> i128 {
    -scaled_floor(-v)
}

// x·2^60 = (lon·2^64 + 180·2^64) / 5760 and y·2^60 = (lat·2^64 + 90·2^64) / 2880;
// floor(v/d) = floor(floor(v)/d) for integer d.
const LON_DIV: i128 = 360 * 16;
const LAT_DIV: i128 = 180 * 16;

fn lon_to_unit_floor(lon: f64) -> u64 {
    ((scaled_floor(lon) + (180i128 << 64)).div_euclid(LON_DIV)) as u64
}

fn lat_to_unit_floor(lat: f64) -> u64 {
    ((scaled_floor(lat) + (90i128 << 64)).div_euclid(LAT_DIV)) as u64
}

fn lon_to_unit_ceil(lon: f64) -> u64 {
    let n = scaled_ceil(lon) + (180i128 << 64);
    (n + LON_DIV - 1).div_euclid(LON_DIV) as u64
}

fn lat_to_unit_ceil(lat: f64) -> u64 {
    let n = scaled_ceil(lat) + (90i128 << 64);
    (n + LAT_DIV - 1).div_euclid(LAT_DIV) as u64
}

/// Inclusive 60-bit unit-square bounds of every point a query rectangle can
/// contain: `(x_lo, x_hi, y_lo, y_hi)`.
pub(crate) fn rect_unit_bounds(r: &CellRect) -> (u64, u64, u64, u64) {
    let x_lo = lon_to_unit_floor(r.lon_min);
    let x_hi = lon_to_unit_ceil(r.lon_max).clamp(1, UNIT_ONE) - 1;
    let y_lo = lat_to_unit_floor(r.lat_min);
    let y_hi = lat_to_unit_ceil(r.lat_max).clamp(1, UNIT_ONE) - 1;
    (x_lo, x_hi, y_lo, y_hi)
}

/// Exact signed decimal `±digits / 10^scale`.
struct Decimal {
    negative: bool,
    digits: u128,
    scale: u32,
}

impl Decimal {
    fn parse(s: &str) -> Result<Decimal> {
        let bytes = s.trim().as_bytes();
        let (negative, body) = match bytes.first() {
            Some(b'-') => (true, &bytes[1..]),
            Some(b'+') => (false, &bytes[1..]),
            _ => (false, bytes),
        };
        let offset = bytes.len() - body.len();
        let mut digits: u128 = 0;
        let mut scale = 0u32;
        let mut seen_point = false;
        let mut seen_digit = false;
        for (i, &c) in body.iter().enumerate() {
            match c {
                b'0'..=b'9' => {
                    seen_digit = true;
                    if seen_point {
                        scale += 1;
                        if scale as usize > MAX_DECIMAL_DIGITS {
                            return Err(Error::Parse {
                                position: offset + i,
                                message: format!(
                                    "more than {MAX_DECIMAL_DIGITS} fractional digits"
                                ),
                            });
                        }
                    }
                    digits = digits
                        .checked_mul(10)
                        .and_then(|d| d.checked_add((c - b'0') as u128))
                        .filter(|d| *d < 10u128.pow(24))
                        .ok_or_else(|| Error::Parse {
                            position: offset + i,
                            message: "coordinate has too many digits".into(),
                        })?;
                }
                b'.' if !seen_point => seen_point = true,
                _ => {
                    return Err(Error::Parse {
                        position: offset + i,
                        message: format!("unexpected character {:?}", c as char),
                    })
                }
            }
        }
        if !seen_digit {
            return Err(Error::Parse {
                position: offset,
                message: "expected a decimal number".into(),
            });
        }
        Ok(Decimal {
            negative,
            digits,
            scale,
        })
    }

    /// `floor((v + half) / (2·half) · 2^60)` with a domain check `v ∈ [-half, half)`.
    fn unit_floor(&self, field: &'static str, half: u128) -> Result<u64> {
        let pow = 10u128.pow(self.scale);
        let offset = half * pow;
        let shifted = if self.negative {
            offset.checked_sub(self.digits)
        } else {
            Some(offset + self.digits)
        };
        let out_of_range = || Error::Domain {
            field,
            value: format!(
                "{}{}e-{}",
                if self.negative { "-" } else { "" },
                self.digits,
                self.scale
            ),
        };
        let shifted = shifted.ok_or_else(out_of_range)?;
        if shifted >= 2 * offset {
            return Err(out_of_range());
        }
        // (v + half)/(2 half) · 2^60 = shifted · 2^(60 - k) / (2 half / 2^k · pow)
        // with 2·half = 360 = 45·8 or 180 = 45·4.
        let (tz, odd) = match half {
            180 => (3, 45u128),
            90 => (2, 45u128),
            _ => unreachable!("unsupported coordinate half-range"),
        };
        Ok(((shifted << (60 - tz)) / (odd * pow)) as u64)
    }
}

fn spread(v: u64) -> u64 {
    let mut x = v & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn compact(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0xFFFF_FFFF
}

/// The full 60-bit interleaving of a unit point.
pub fn interleave60(u: &UnitPoint) -> u64 {
    let x30 = u.x >> 30;
    let y30 = u.y >> 30;
    (spread(x30) << 1) | spread(y30)
}

/// `m`-bit standard geohash of a unit point.
pub fn encode(u: &UnitPoint, bits: u8) -> Result<HashCode> {
    check_bits(bits)?;
    Ok(HashCode {
        code: interleave60(u) >> (MAX_BITS - bits),
        bits,
    })
}

/// 60-bit standard hash of a coordinate as a `2^63` fraction.
pub fn hash_value(p: &GeoPoint) -> Result<Fix63> {
    Ok(Fix63::from_hash60(interleave60(&to_unit(p)?)))
}

/// Rectangle of every point whose `depth`-bit hash is `code`; depth 0 is the
/// whole world.
pub fn cell_rect(code: u64, depth: u8) -> CellRect {
    debug_assert!(depth <= MAX_BITS && code >> depth == 0);
    let full = if depth == 0 {
        0
    } else {
        code << (MAX_BITS - depth)
    };
    let lon_bits = depth.div_ceil(2) as u32;
    let lat_bits = (depth / 2) as u32;
    let x = compact(full >> 1) >> (30 - lon_bits);
    let y = compact(full) >> (30 - lat_bits);
    let lon_step = 360.0 / (1u64 << lon_bits) as f64;
    let lat_step = 180.0 / (1u64 << lat_bits) as f64;
    let lon_min = x as f64 * lon_step - 180.0;
    let lat_min = y as f64 * lat_step - 90.0;
    CellRect {
        lat_min,
        lat_max: lat_min + lat_step,
        lon_min,
        lon_max: lon_min + lon_step,
    }
}

/// Unit-square extent of a cell as inclusive 60-bit bounds `(x_lo, x_hi, y_lo, y_hi)`.
pub(crate) fn cell_unit_bounds(code: u64, depth: u8) -> (u64, u64, u64, u64) {
    let full = if depth == 0 {
        0
    } else {
        code << (MAX_BITS - depth)
    };
    let lon_bits = depth.div_ceil(2) as u32;
    let lat_bits = (depth / 2) as u32;
    let x = compact(full >> 1) >> (30 - lon_bits);
    let y = compact(full) >> (30 - lat_bits);
    let x_span = 1u64 << (UNIT_BITS - lon_bits);
    let y_span = 1u64 << (UNIT_BITS - lat_bits);
    let x_lo = x * x_span;
    let y_lo = y * y_span;
    (x_lo, x_lo + x_span - 1, y_lo, y_lo + y_span - 1)
}

pub fn decode_cell(h: &HashCode) -> CellRect {
    cell_rect(h.code, h.bits)
}

pub fn render_base32(h: &HashCode) -> Result<String> {
    if !h.bits.is_multiple_of(5) {
        return Err(Error::arg(format!(
            "base-32 rendering needs a multiple of 5 bits, got {}",
            h.bits
        )));
    }
    let chars = h.bits / 5;
    Ok((0..chars)
        .map(|i| {
            let shift = 5 * (chars - 1 - i) as u32;
            BASE32_ALPHABET[((h.code >> shift) & 31) as usize] as char
        })
        .collect())
}

pub fn parse_base32(s: &str) -> Result<HashCode> {
    if s.is_empty() || s.len() > (MAX_BITS / 5) as usize {
        return Err(Error::Parse {
            position: 0,
            message: format!("geohash length {} not in 1..=12", s.len()),
        });
    }
    let mut code = 0u64;
    for (i, c) in s.bytes().enumerate() {
        let digit = BASE32_ALPHABET
            .iter()
            .position(|&a| a == c)
            .ok_or_else(|| Error::Parse {
                position: i,
                message: format!("invalid geohash character {:?}", c as char),
            })?;
        code = (code << 5) | digit as u64;
    }
    Ok(HashCode {
        code,
        bits: 5 * s.len() as u8,
    })
}
