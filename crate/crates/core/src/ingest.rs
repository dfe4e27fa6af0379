//! Weighted-point CSV and seeded synthetic point clouds.

use std::io::{Read, Write};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geohash::GeoPoint;
use crate::model::WeightedPoint;

/// Reads `lat,lon[,weight]` rows; a missing weight column means weight 1.
pub fn read_points_csv<R: Read>(source: R) -> Result<Vec<WeightedPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let csv_err = |line: u64, message: String| Error::Csv { line, message };
    let header = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let with_weight = match header.iter().collect::<Vec<_>>().as_slice() {
        ["lat", "lon"] => false,
        ["lat", "lon", "weight"] => true,
        _ => {
            return Err(csv_err(
                1,
                format!(
                    "expected header lat,lon[,weight], found {:?}",
                    header.as_slice()
                ),
            ))
        }
    };
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>()
                .map_err(|_| csv_err(line, format!("{name} {text:?} is not a number")))
        };
        let lat = field(0, "lat")?;
        let lon = field(1, "lon")?;
        let point = GeoPoint::new(lat, lon).map_err(|e| match e {
            Error::Domain { field, .. } => csv_err(line, format!("{field} out of range")),
            other => other,
        })?;
        let weight = if with_weight {
            let text = record.get(2).unwrap_or("");
            text.parse::<u64>().map_err(|_| {
                csv_err(
                    line,
                    format!("weight {text:?} is not a non-negative integer"),
                )
            })?
        } else {
            1
        };
        points.push(WeightedPoint::new(point, weight));
    }
    Ok(points)
}

/// Writes points with a full `lat,lon,weight` header; values round-trip exactly.
pub fn write_points_csv<W: Write>(mut sink: W, points: &[WeightedPoint]) -> Result<()> {
    let mut out = String::with_capacity(32 * points.len() + 16);
    out.push_str("lat,lon,weight\n");
    for wp in points {
        out.push_str(&format!(
            "{:?},{:?},{}\n",
            wp.point.lat, wp.point.lon, wp.weight
        ));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub center: GeoPoint,
    pub sigma_lat: f64,
    pub sigma_lon: f64,
    pub weight: f64,
}

/// Gaussian clusters over a uniform background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    #[serde(default)]
    pub uniform_floor: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Tolerance on the mixing weights summing to one.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Gaussian draws farther than this many sigmas are rejected.
pub const TRUNCATION_SIGMAS: f64 = 6.0;

impl MixtureSpec {
    pub fn uniform(seed: u64) -> MixtureSpec {
        MixtureSpec {
            components: Vec::new(),
            uniform_floor: 1.0,
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<MixtureSpec> {
        let spec: MixtureSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let floor = self.uniform_floor;
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::arg(format!("uniform_floor {floor} not in [0, 1]")));
        }
        let mut total = floor;
        for (i, c) in self.components.iter().enumerate() {
            c.center
                .validate()
                .map_err(|e| Error::arg(format!("component {i}: {e}")))?;
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::arg(format!(
                    "component {i}: weight must be positive"
                )));
            }
            for (name, s) in [("sigma_lat", c.sigma_lat), ("sigma_lon", c.sigma_lon)] {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::arg(format!(
                        "component {i}: {name} must be positive"
                    )));
                }
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::arg(format!(
                "mixing weights plus uniform_floor sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits of one draw.
fn unit(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (-53f64).exp2()
}

/// Marsaglia polar method: one pair of independent standard normals.
fn normal_pair(rng: &mut ChaCha20Rng) -> (f64, f64) {
    loop {
        let u = 2.0 * unit(rng) - 1.0;
        let v = 2.0 * unit(rng) - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

/// `n` unit-weight points drawn from `spec`.
///
/// The stream is frozen: a ChaCha20 generator seeded with `seed_from_u64(spec.seed)`
/// yields 64-bit words, and `u()` denotes `(word >> 11) · 2^-53`. Per point:
///
/// 1. draw `u()`; if it is below `uniform_floor`, return
///    `(lat, lon) = (-90 + 180·u(), -180 + 360·u())`, drawing lat first;
/// 2. otherwise subtract `uniform_floor` and pick the first component whose
///    running weight sum exceeds the remainder (the last one if none does);
/// 3. draw a normal pair `(z_lat, z_lon)` by the polar method (`u = 2u()-1`,
///    `v = 2u()-1`, retry unless `0 < s < 1`, scale by `sqrt(-2 ln s / s)`);
///    retry step 3 if either `|z| > 6`, or if `center + sigma·z` falls outside
///    `[-90, 90) × [-180, 180)`.
///
/// Everything is exact integer or correctly rounded IEEE arithmetic except
/// `ln`, whose last-place rounding is up to the platform math library.
pub fn synth_mixture(spec: &MixtureSpec, n: usize) -> Result<Vec<WeightedPoint>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::arg("point count must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u = unit(&mut rng);
        let point = if u < spec.uniform_floor || spec.components.is_empty() {
            let lat = -90.0 + 180.0 * unit(&mut rng);
            let lon = -180.0 + 360.0 * unit(&mut rng);
            GeoPoint { lat, lon }
        } else {
            let mut rest = u - spec.uniform_floor;
            let mut chosen = spec.components.last().expect("non-empty");
            for c in &spec.components {
                if rest < c.weight {
                    chosen = c;
                    break;
                }
                rest -= c.weight;
            }
            sample_component(&mut rng, chosen)
        };
        points.push(WeightedPoint::unit(point));
    }
    Ok(points)
}

fn sample_component(rng: &mut ChaCha20Rng, c: &MixtureComponent) -> GeoPoint {
    loop {
        let (z_lat, z_lon) = normal_pair(rng);
        if z_lat.abs() > TRUNCATION_SIGMAS || z_lon.abs() > TRUNCATION_SIGMAS {
            continue;
        }
        let lat = c.center.lat + c.sigma_lat * z_lat;
        let lon = c.center.lon + c.sigma_lon * z_lon;
        if (-90.0..90.0).contains(&lat) && (-180.0..180.0).contains(&lon) {
            return GeoPoint { lat, lon };
        }
    }
}
