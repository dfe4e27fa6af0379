//! Geohash entropy, entropy-per-bit curves and the sample-size bound for the
//! balanced hash.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fixed::{Fix63, FRAC_BITS};
use crate::geohash::{self, MAX_BITS};
use crate::model::{BalancedModel, WeightedPoint};

/// Hash scheme used to bucket points.
#[derive(Debug, Clone, Copy)]
pub enum Scheme<'a> {
    Standard,
    Balanced(&'a BalancedModel),
}

impl Scheme<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::Balanced(_) => "balanced",
        }
    }

    /// Full-precision hash value of a point under this scheme.
    pub fn value(&self, wp: &WeightedPoint) -> Result<Fix63> {
        let g = geohash::hash_value(&wp.point)?;
        Ok(match self {
            Scheme::Standard => g,
            Scheme::Balanced(model) => model.forward(g),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub scheme: String,
    pub bits: u8,
    pub entropy: f64,
    pub entropy_per_bit: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
}

impl EntropyReport {
    pub fn extend(&mut self, other: EntropyReport) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,bits,entropy,entropy_per_bit\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.scheme,
                r.bits,
                format_significant(r.entropy, 12),
                format_significant(r.entropy_per_bit, 12)
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn row(&self, scheme: &str, bits: u8) -> Option<&EntropyRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.bits == bits)
    }
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i64;
    if magnitude < -5 || magnitude >= digits as i64 {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Shannon entropy in bits of a histogram, summed in index order.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return Err(Error::arg("histogram has zero total"));
    }
    Ok(entropy_of(counts.iter().map(|&c| c as u128), total))
}

fn entropy_of(counts: impl Iterator<Item = u128>, total: u128) -> f64 {
    let t = total as f64;
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / t;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Sorted `(value, weight)` pairs for positive-weight points.
fn weighted_values(
    points: &[WeightedPoint],
    scheme: Scheme<'_>,
) -> Result<(Vec<(u64, u64)>, u128)> {
    let mut values = Vec::with_capacity(points.len());
    let mut total: u128 = 0;
    for (row, wp) in points.iter().enumerate() {
        if wp.weight == 0 {
            continue;
        }
        let v = scheme
            .value(wp)
            .map_err(|e| Error::arg(format!("point {row} ({} scheme): {e}", scheme.label())))?;
        values.push((v.raw(), wp.weight));
        total += wp.weight as u128;
    }
    if total == 0 {
        return Err(Error::arg("no points with positive weight"));
    }
    values.sort_unstable();
    Ok((values, total))
}

/// Entropy of the `m`-bit bucketing for each requested precision.
pub fn entropy_curve(
    points: &[WeightedPoint],
    scheme: Scheme<'_>,
    precisions: &[u8],
) -> Result<EntropyReport> {
    if precisions.is_empty() {
        return Err(Error::arg("no precisions requested"));
    }
    if let Some(&m) = precisions.iter().find(|&&m| m == 0 || m > MAX_BITS) {
        return Err(Error::arg(format!("precision {m} not in 1..=60")));
    }
    let (values, total) = weighted_values(points, scheme)?;
    let rows = precisions
        .iter()
        .map(|&m| {
            let shift = FRAC_BITS - m as u32;
            let groups = values
                .chunk_by(|a, b| a.0 >> shift == b.0 >> shift)
                .map(|g| g.iter().map(|&(_, w)| w as u128).sum::<u128>());
            let h = entropy_of(groups, total);
            EntropyRow {
                scheme: scheme.label().to_string(),
                bits: m,
                entropy: h,
                entropy_per_bit: h / m as f64,
            }
        })
        .collect();
    Ok(EntropyReport { rows })
}

/// Largest prefix length for which a dense histogram is built.
pub const MAX_HISTOGRAM_BITS: u8 = 24;

/// Weight per `bits`-bit prefix bucket, indexed by prefix code.
pub fn bucket_histogram(
    points: &[WeightedPoint],
    scheme: Scheme<'_>,
    bits: u8,
) -> Result<Vec<u64>> {
    if bits == 0 || bits > MAX_HISTOGRAM_BITS {
        return Err(Error::arg(format!(
            "histogram bits {bits} not in 1..={MAX_HISTOGRAM_BITS}"
        )));
    }
    let mut hist = vec![0u64; 1 << bits];
    let shift = FRAC_BITS - bits as u32;
    for (row, wp) in points.iter().enumerate() {
        let v = scheme
            .value(wp)
            .map_err(|e| Error::arg(format!("point {row}: {e}")))?;
        let slot = &mut hist[(v.raw() >> shift) as usize];
        *slot = slot.saturating_add(wp.weight);
    }
    Ok(hist)
}

/// Heaviest bucket relative to the mean bucket weight.
pub fn max_over_mean(hist: &[u64]) -> f64 {
    let total: u128 = hist.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return 0.0;
    }
    let max = hist.iter().copied().max().unwrap_or(0);
    max as f64 * hist.len() as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    /// Entropy lower bound in bits.
    pub threshold: f64,
    /// Probability that the bound holds; may be negative (vacuous).
    pub probability_lower_bound: f64,
}

/// Entropy guarantee for a depth-`q` balanced hash fitted on `n` unique points:
/// `H ≥ q·n/(n+2)·a` with probability at least
/// `1 − 2·exp(−0.49 · 2^(−2q) · n · (1 − a)²)`.
pub fn theorem_bound(q: u32, n: u64, a: f64) -> Result<BoundResult> {
    if q == 0 {
        return Err(Error::arg("q must be at least 1"));
    }
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::arg(format!("a = {a} not in [0, 1]")));
    }
    let n = n as f64;
    let scale = n / (n + 2.0);
    let exponent = -0.49 * (-2.0 * q as f64).exp2() * n * (1.0 - a).powi(2);
    Ok(BoundResult {
        threshold: q as f64 * scale * a,
        probability_lower_bound: 1.0 - 2.0 * exponent.exp(),
    })
}
