//! Unsigned binary fractions on `[0, 1]` with denominator `2^63`.
//!
//! All interval arithmetic in hash space (breakpoints, balanced values,
//! decoded preimages, range covers) is carried out in this representation so
//! results are bit-identical across platforms.

use std::fmt;

/// Number of fractional bits.
pub const FRAC_BITS: u32 = 63;

#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fix63(u64);

impl Fix63 {
    pub const ZERO: Fix63 = Fix63(0);
    pub const ONE: Fix63 = Fix63(1 << FRAC_BITS);

    /// Wraps a raw numerator. Values above `2^63` are clamped to one.
    pub const fn from_raw(raw: u64) -> Fix63 {
        if raw > Self::ONE.0 {
            Self::ONE
        } else {
            Fix63(raw)
        }
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    /// Lifts a left-aligned 60-bit hash fraction.
    pub const fn from_hash60(g: u64) -> Fix63 {
        Fix63(g << 3)
    }

    /// Nearest representable fraction; intended for configuration and tests.
    pub fn from_f64(v: f64) -> Fix63 {
        if v.is_nan() || v <= 0.0 {
            return Self::ZERO;
        }
        if v >= 1.0 {
            return Self::ONE;
        }
        Fix63((v * (1u64 << FRAC_BITS) as f64).round() as u64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u64 << FRAC_BITS) as f64
    }

    /// Size of one cell of the `bits`-bit dyadic grid.
    pub const fn grid_step(bits: u32) -> u64 {
        1u64 << (FRAC_BITS - bits)
    }

    /// Rounds down onto the `bits`-bit grid.
    pub const fn grid_floor(self, bits: u32) -> Fix63 {
        let step = Self::grid_step(bits);
        Fix63(self.0 / step * step)
    }

    /// Rounds up onto the `bits`-bit grid.
    pub const fn grid_ceil(self, bits: u32) -> Fix63 {
        let step = Self::grid_step(bits);
        Fix63(self.0.div_ceil(step) * step)
    }
}

impl fmt::Debug for Fix63 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fix63({} ~ {:.12})", self.0, self.to_f64())
    }
}

impl fmt::Display for Fix63 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Half-open interval `[start, end)` of hash values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashInterval {
    pub start: Fix63,
    pub end: Fix63,
}

impl HashInterval {
    pub fn new(start: Fix63, end: Fix63) -> HashInterval {
        debug_assert!(start <= end);
        HashInterval { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, v: Fix63) -> bool {
        self.start <= v && v < self.end
    }

    pub fn width(&self) -> u64 {
        self.end.raw().saturating_sub(self.start.raw())
    }

    pub fn measure(&self) -> f64 {
        self.width() as f64 / Fix63::ONE.raw() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rounding() {
        let step4 = Fix63::grid_step(4);
        let v = Fix63::from_raw(5 * step4 + 1);
        assert_eq!(v.grid_floor(4).raw(), 5 * step4);
        assert_eq!(v.grid_ceil(4).raw(), 6 * step4);
        assert_eq!(Fix63::ONE.grid_ceil(4), Fix63::ONE);
        assert_eq!(Fix63::ZERO.grid_floor(60), Fix63::ZERO);
    }

    #[test]
    fn f64_conversions() {
        assert_eq!(Fix63::from_f64(0.5).raw(), 1 << 62);
        assert_eq!(Fix63::from_f64(2.0), Fix63::ONE);
        assert_eq!(Fix63::from_f64(-1.0), Fix63::ZERO);
        assert_eq!(Fix63::from_raw(u64::MAX), Fix63::ONE);
        assert_eq!(Fix63::from_hash60(1 << 59).to_f64(), 0.5);
    }
}
