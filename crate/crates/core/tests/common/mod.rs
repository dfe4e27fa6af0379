#![allow(dead_code)]

use bgeohash::ingest::{MixtureComponent, MixtureSpec};
use bgeohash::GeoPoint;

fn component(lat: f64, lon: f64, sigma_lat: f64, sigma_lon: f64, weight: f64) -> MixtureComponent {
    MixtureComponent {
        center: GeoPoint { lat, lon },
        sigma_lat,
        sigma_lon,
        weight,
    }
}

/// Five population centres a few degrees wide over a thin uniform
/// background; peak density exceeds the background by more than 1000:1.
pub fn skewed_spec(seed: u64) -> MixtureSpec {
    MixtureSpec {
        components: vec![
            component(40.7, -74.0, 3.0, 3.9, 0.35),
            component(51.5, -0.1, 2.4, 3.1, 0.25),
            component(35.7, 139.7, 3.0, 3.9, 0.18),
            component(-23.5, -46.6, 3.6, 4.7, 0.12),
            component(19.1, 72.9, 2.1, 2.7, 0.07),
        ],
        uniform_floor: 0.03,
        seed,
    }
}

/// SplitMix64 stream for test scenario parameters.
pub struct Stream(pub u64);

impl Stream {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

use bgeohash::ingest::synth_mixture;
use bgeohash::plan::plan_query_within;
use bgeohash::{make_key, BalancedModel, CellRect, StKeyConfig, WeightedPoint};

pub struct ScenarioOutcome {
    pub inside: usize,
    pub false_negatives: usize,
    pub range_count: usize,
    pub max_ranges: usize,
}

/// Random model, rectangle, window and budget; every point that lies in the
/// query region is checked against the plan.
pub fn planner_scenario(seed: u64, n_points: usize) -> ScenarioOutcome {
    let mut s = Stream(seed);
    let train = synth_mixture(&skewed_spec(seed), 2_000).unwrap();
    let model = BalancedModel::fit(&train, 1 + s.below(12) as u8).unwrap();
    let prefix_bits = 4 * (1 + s.below(4) as u8);
    let suffix_bits = 4 * s.below(4) as u8;
    let resolution = [60, 3_600, 86_400][s.below(3) as usize];
    let config = StKeyConfig::new(prefix_bits, resolution, suffix_bits).unwrap();

    // rectangles around a cluster centre half the time, anywhere otherwise
    let (lat_c, lon_c) = if s.below(2) == 0 {
        let c = &skewed_spec(0).components[s.below(5) as usize].center;
        (c.lat, c.lon)
    } else {
        (s.range(-80.0, 80.0), s.range(-170.0, 170.0))
    };
    let half_lat = s.range(0.01, 20.0);
    let half_lon = s.range(0.01, 40.0);
    let bbox = CellRect::new(
        (lat_c - half_lat).max(-90.0),
        (lat_c + half_lat).min(90.0),
        (lon_c - half_lon).max(-180.0),
        (lon_c + half_lon).min(180.0),
    )
    .unwrap();
    let horizon = 20_000_000i64;
    let t_start = s.below(horizon as u64) as i64;
    let t_end = t_start + s.below(2_000_000) as i64;
    let max_ranges = 1 + s.below(64) as usize;
    let extent = (s.below(2) == 0).then_some((0, horizon + 2_000_000));

    let plan =
        plan_query_within(&config, &model, &bbox, t_start, t_end, max_ranges, extent).unwrap();

    let mut points: Vec<(WeightedPoint, i64)> = Vec::with_capacity(n_points);
    let background = synth_mixture(&skewed_spec(seed ^ 0xabc), n_points / 2).unwrap();
    for wp in background {
        points.push((wp, s.below(horizon as u64 + 2_000_000) as i64));
    }
    while points.len() < n_points {
        let lat = s.range(bbox.lat_min, bbox.lat_max);
        let lon = s.range(bbox.lon_min, bbox.lon_max);
        let Ok(p) = bgeohash::GeoPoint::new(lat, lon) else {
            continue;
        };
        let t = t_start - 1_000 + s.below((t_end - t_start) as u64 + 2_000) as i64;
        points.push((WeightedPoint::unit(p), t.max(0)));
    }

    let mut inside = 0;
    let mut false_negatives = 0;
    for (wp, t) in &points {
        if bbox.contains(&wp.point) && (t_start..=t_end).contains(t) {
            inside += 1;
            let key = make_key(&config, &model, &wp.point, *t)
                .unwrap()
                .to_string();
            if !plan.covers(&key) {
                false_negatives += 1;
            }
        }
    }
    ScenarioOutcome {
        inside,
        false_negatives,
        range_count: plan.range_count,
        max_ranges,
    }
}
