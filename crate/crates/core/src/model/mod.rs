//! Data-balanced rescaling of the standard geohash.
//!
//! A [`BalancedModel`] of depth `q` stores `2^q + 1` breakpoints
//! `0 = s_0 ≤ s_1 ≤ … ≤ s_{2^q} = 1` in standard-hash space. Interior
//! breakpoints are scaled weighted quantiles of the training hashes,
//! `s_i = N/(N+2) · G⁻¹(i / 2^q)`, where `G⁻¹(p) = inf{t : G(t) ≥ p}` and `N`
//! counts distinct 60-bit hashes.
//!
//! The breakpoint map sends balanced space to standard space. Encoding runs
//! it backwards: a standard hash `g` in bucket `[s_i, s_{i+1})` becomes
//! `(i + (g − s_i) / (s_{i+1} − s_i)) / 2^q`, floored in fixed point. Buckets
//! of zero width never receive points; a hash sitting on a shared breakpoint
//! goes to the first non-empty bucket to its right.

mod format;
mod regions;

pub use regions::{bucket_regions, dyadic_cover, BucketRegion, DyadicCell};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Fix63, HashInterval, FRAC_BITS};
use crate::geohash::{self, GeoPoint, HashCode, UnitPoint, MAX_BITS};

/// Largest supported balance depth.
pub const MAX_DEPTH: u8 = 24;

/// A coordinate carrying a nonnegative multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub point: GeoPoint,
    pub weight: u64,
}

impl WeightedPoint {
    pub fn new(point: GeoPoint, weight: u64) -> WeightedPoint {
        WeightedPoint { point, weight }
    }

    pub fn unit(point: GeoPoint) -> WeightedPoint {
        WeightedPoint { point, weight: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedModel {
    depth: u8,
    breakpoints: Vec<Fix63>,
    n_points: u64,
    total_weight: u64,
}

fn check_depth(q: u8) -> Result<()> {
    if q == 0 || q > MAX_DEPTH {
        return Err(Error::arg(format!(
            "balance depth {q} not in 1..={MAX_DEPTH}"
        )));
    }
    Ok(())
}

fn check_bits(m: u8) -> Result<()> {
    if m == 0 || m > MAX_BITS {
        return Err(Error::arg(format!("bit count {m} not in 1..=60")));
    }
    Ok(())
}

/// `floor(a · b / c)` without overflow for 64-bit operands.
fn mul_div_floor(a: u64, b: u64, c: u64) -> u64 {
    (a as u128 * b as u128 / c as u128) as u64
}

fn mul_div_ceil(a: u64, b: u64, c: u64) -> u64 {
    (a as u128 * b as u128).div_ceil(c as u128) as u64
}

impl BalancedModel {
    /// Fits a model from weighted coordinates.
    pub fn fit(points: &[WeightedPoint], q: u8) -> Result<BalancedModel> {
        check_depth(q)?;
        let mut samples = Vec::with_capacity(points.len());
        for (row, wp) in points.iter().enumerate() {
            if wp.weight == 0 {
                continue;
            }
            let g = geohash::hash_value(&wp.point)
                .map_err(|e| Error::Fit(format!("point {row}: {e}")))?;
            samples.push((g, wp.weight));
        }
        Self::fit_hash_values(samples, q)
    }

    /// Fits a model directly from `(standard hash value, weight)` samples.
    pub fn fit_hash_values(mut samples: Vec<(Fix63, u64)>, q: u8) -> Result<BalancedModel> {
        check_depth(q)?;
        samples.retain(|&(_, w)| w > 0);
        if samples.is_empty() {
            return Err(Error::Fit("no points with positive weight".into()));
        }
        if let Some(&(g, _)) = samples.iter().find(|(g, _)| *g >= Fix63::ONE) {
            return Err(Error::Fit(format!("hash value {g:?} outside [0, 1)")));
        }
        samples.sort_unstable_by_key(|&(g, _)| g);

        // Collapse to distinct values with running cumulative weight.
        let mut values: Vec<u64> = Vec::new();
        let mut cumulative: Vec<u128> = Vec::new();
        let mut running: u128 = 0;
        for (g, w) in samples {
            running += w as u128;
            if values.last() == Some(&g.raw()) {
                *cumulative.last_mut().expect("parallel vectors") = running;
            } else {
                values.push(g.raw());
                cumulative.push(running);
            }
        }
        let total: u64 = running
            .try_into()
            .map_err(|_| Error::Fit(format!("total weight {running} exceeds 64 bits")))?;
        let distinct = values.len() as u64;

        let buckets = 1u64 << q;
        let mut breakpoints = Vec::with_capacity(buckets as usize + 1);
        breakpoints.push(Fix63::ZERO);
        for i in 1..buckets {
            // ⌈i·W / 2^q⌉-th smallest value counting multiplicity
            let rank = (i as u128 * total as u128).div_ceil(buckets as u128);
            let idx = cumulative.partition_point(|&c| c < rank);
            let quantile = values[idx];
            breakpoints.push(Fix63::from_raw(mul_div_floor(
                distinct,
                quantile,
                distinct + 2,
            )));
        }
        breakpoints.push(Fix63::ONE);

        let model = BalancedModel {
            depth: q,
            breakpoints,
            n_points: distinct,
            total_weight: total,
        };
        debug_assert!(model.validate().is_ok());
        Ok(model)
    }

    /// The model whose forward map is the identity (`s_i = i / 2^q`).
    pub fn identity(q: u8) -> Result<BalancedModel> {
        check_depth(q)?;
        let step = Fix63::grid_step(q as u32);
        let breakpoints = (0..=(1u64 << q))
            .map(|i| Fix63::from_raw(i * step))
            .collect();
        Ok(BalancedModel {
            depth: q,
            breakpoints,
            n_points: 0,
            total_weight: 0,
        })
    }

    /// Builds a model from explicit breakpoints. `n_points == 0` marks a
    /// model that was not fitted, which skips the scaling-bound check.
    pub fn from_parts(
        q: u8,
        breakpoints: Vec<Fix63>,
        n_points: u64,
        total_weight: u64,
    ) -> Result<BalancedModel> {
        check_depth(q)?;
        let model = BalancedModel {
            depth: q,
            breakpoints,
            n_points,
            total_weight,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        use crate::error::LoadCheck;
        let expected = (1usize << self.depth) + 1;
        if self.breakpoints.len() != expected {
            return Err(Error::load(
                LoadCheck::Length,
                format!(
                    "{} breakpoints, expected {expected}",
                    self.breakpoints.len()
                ),
            ));
        }
        if self.breakpoints[0] != Fix63::ZERO || self.breakpoints[expected - 1] != Fix63::ONE {
            return Err(Error::load(
                LoadCheck::Endpoints,
                "breakpoints must start at 0 and end at 1",
            ));
        }
        if let Some(i) = self.breakpoints.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::load(
                LoadCheck::Monotonicity,
                format!("breakpoint {} exceeds breakpoint {}", i, i + 1),
            ));
        }
        if self.n_points > 0 {
            let n = self.n_points;
            let bound = mul_div_floor(n, Fix63::ONE.raw(), n + 2) + 1;
            if let Some(i) = self.breakpoints[1..expected - 1]
                .iter()
                .position(|s| s.raw() > bound)
            {
                return Err(Error::load(
                    LoadCheck::ScalingBound,
                    format!("breakpoint {} above N/(N+2)", i + 1),
                ));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn breakpoints(&self) -> &[Fix63] {
        &self.breakpoints
    }

    /// Number of distinct 60-bit hashes seen by the fit (0 if not fitted).
    pub fn n_points(&self) -> u64 {
        self.n_points
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn bucket_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Standard-hash interval assigned to top-level bucket `i`.
    pub fn bucket(&self, i: usize) -> HashInterval {
        HashInterval::new(self.breakpoints[i], self.breakpoints[i + 1])
    }

    fn bucket_span(&self) -> u64 {
        Fix63::grid_step(self.depth as u32)
    }

    /// Forward map from standard-hash space to balanced space. Total and
    /// monotone non-decreasing on `[0, 1]`.
    pub fn forward(&self, g: Fix63) -> Fix63 {
        if g >= Fix63::ONE {
            return Fix63::ONE;
        }
        let i = self.breakpoints.partition_point(|&s| s <= g) - 1;
        let lo = self.breakpoints[i].raw();
        let width = self.breakpoints[i + 1].raw() - lo;
        let span = self.bucket_span();
        Fix63::from_raw(i as u64 * span + mul_div_floor(g.raw() - lo, span, width))
    }

    /// Least standard hash whose forward image is at least `t`.
    pub fn inverse(&self, t: Fix63) -> Fix63 {
        if t >= Fix63::ONE {
            return Fix63::ONE;
        }
        let span = self.bucket_span();
        let i = (t.raw() / span) as usize;
        let offset = t.raw() - i as u64 * span;
        let lo = self.breakpoints[i].raw();
        let width = self.breakpoints[i + 1].raw() - lo;
        Fix63::from_raw(lo + mul_div_ceil(offset, width, span))
    }

    /// First `m` bits of the balanced value of a standard hash `g < 1`.
    pub fn encode_value(&self, g: Fix63, m: u8) -> Result<HashCode> {
        check_bits(m)?;
        if g >= Fix63::ONE {
            return Err(Error::arg("hash value must be below 1"));
        }
        let h = self.forward(g);
        HashCode::new(h.raw() >> (FRAC_BITS - m as u32), m)
    }

    pub fn encode_unit(&self, u: &UnitPoint, m: u8) -> Result<HashCode> {
        self.encode_value(Fix63::from_hash60(geohash::interleave60(u)), m)
    }

    /// Balanced `m`-bit geohash of a coordinate.
    pub fn encode(&self, p: &GeoPoint, m: u8) -> Result<HashCode> {
        self.encode_unit(&geohash::to_unit(p)?, m)
    }

    /// Exact set of standard hashes that encode to `h`. Empty when `h` lies
    /// entirely inside zero-width buckets.
    pub fn decode(&self, h: &HashCode) -> HashInterval {
        HashInterval::new(self.inverse(h.start()), self.inverse(h.end()))
    }
}
