//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

extern crate geohash as geohash_ref;

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bgeohash::entropy::{bucket_histogram, entropy_curve, max_over_mean, theorem_bound, Scheme};
use bgeohash::error::{Error, LoadCheck};
use bgeohash::geohash::{self, cell_rect, render_base32};
use bgeohash::ingest::{synth_mixture, MixtureSpec};
use bgeohash::model::WeightedPoint;
use bgeohash::{BalancedModel, GeoPoint};
use common::{planner_scenario, skewed_spec, Stream};

type Outcome = Result<String, String>;

/// Name, runtime limit in seconds, check.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn geohash_conformance() -> Outcome {
    let p = GeoPoint::new(57.64911, 10.40744).map_err(|e| e.to_string())?;
    let code = geohash::encode(&p.to_unit().unwrap(), 55).unwrap();
    let text = render_base32(&code).unwrap();
    check(text == "u4pruydqqvj", format!("55-bit hash {text}"))?;
    let mut s = Stream(1);
    for _ in 0..1000 {
        let (lat, lon) = (s.range(-90.0, 90.0), s.range(-180.0, 180.0));
        let ours = render_base32(
            &geohash::encode(&GeoPoint::new(lat, lon).unwrap().to_unit().unwrap(), 40).unwrap(),
        )
        .unwrap();
        let theirs = geohash_ref::encode(geohash_ref::Coord { x: lon, y: lat }, 8).unwrap();
        check(
            ours == theirs,
            format!("({lat}, {lon}): {ours} vs {theirs}"),
        )?;
        let back = geohash::parse_base32(&ours).map_err(|e| e.to_string())?;
        check(
            back == geohash::parse_base32(&theirs).unwrap(),
            "parse mismatch",
        )?;
    }
    Ok("u4pruydqqvj; 1000/1000 match reference at 40 bits".into())
}

fn monotone_refinement() -> Outcome {
    let mut s = Stream(2);
    let mut comparisons = 0u64;
    for _ in 0..100_000 {
        let p = GeoPoint::new(s.range(-90.0, 90.0), s.range(-180.0, 180.0)).unwrap();
        let u = p.to_unit().unwrap();
        for q in 1u8..=30 {
            let g_q = geohash::encode(&u, q).unwrap().start().raw();
            let bound = 1u64 << (63 - q as u32);
            for m in [1u8, 5, 30 - q] {
                let g = geohash::encode(&u, q + m).unwrap().start().raw();
                let growth = g
                    .checked_sub(g_q)
                    .ok_or(format!("decrease at q={q} m={m}"))?;
                check(growth < bound, format!("growth {growth} ≥ 2^-{q}"))?;
                comparisons += 1;
            }
        }
    }
    Ok(format!("{comparisons} exact comparisons"))
}

fn uniform_identity_recovery() -> Outcome {
    let pts = synth_mixture(&MixtureSpec::uniform(3), 1_000_000).map_err(|e| e.to_string())?;
    let model = BalancedModel::fit(&pts, 4).map_err(|e| e.to_string())?;
    let worst = model
        .breakpoints()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.to_f64() - i as f64 / 16.0).abs())
        .fold(0.0, f64::max);
    check(worst < 0.005, format!("max deviation {worst}"))?;
    Ok(format!("max |s_i - i/16| = {worst:.5}"))
}

fn theorem_trials() -> Outcome {
    let n = 100_000usize;
    let threshold = 5.0 * (n as f64 / (n as f64 + 2.0)) * (2.0 / 3.0);
    let mut held = 0;
    let mut lowest = f64::INFINITY;
    for trial in 0..200u64 {
        let pts = synth_mixture(&skewed_spec(10_000 + trial), n).map_err(|e| e.to_string())?;
        let model = BalancedModel::fit(&pts, 5).map_err(|e| e.to_string())?;
        let h = entropy_curve(&pts, Scheme::Balanced(&model), &[5])
            .map_err(|e| e.to_string())?
            .rows[0]
            .entropy;
        lowest = lowest.min(h);
        if h >= threshold {
            held += 1;
        }
    }
    check(
        held >= 198,
        format!("{held}/200 trials reached {threshold:.4}"),
    )?;
    Ok(format!(
        "{held}/200 trials ≥ {threshold:.4} bits (lowest {lowest:.4})"
    ))
}

fn bound_calculator() -> Outcome {
    let b = theorem_bound(5, 100_000, 2.0 / 3.0).map_err(|e| e.to_string())?;
    check(
        (b.threshold - 3.3333).abs() <= 1e-4,
        format!("threshold {}", b.threshold),
    )?;
    check(
        (b.probability_lower_bound - 0.9902).abs() <= 1e-4,
        format!("probability {}", b.probability_lower_bound),
    )?;
    let big = theorem_bound(10, 100_000_000, 2.0 / 3.0).map_err(|e| e.to_string())?;
    let oracle = 1.0 - 2.0 * (-0.49 * 2f64.powi(-20) * 1e8 * (1.0f64 / 3.0).powi(2)).exp();
    check(
        (big.probability_lower_bound - oracle).abs() < 1e-12,
        "q=10 formula mismatch",
    )?;
    check(
        (big.probability_lower_bound - 0.9889).abs() < 1e-4,
        format!("q=10 probability {}", big.probability_lower_bound),
    )?;
    Ok(format!(
        "(3.3333, {:.4}); q=10 n=1e8 gives {:.4}, below the 0.99 stated for that case",
        b.probability_lower_bound, big.probability_lower_bound
    ))
}

fn held_out_split(seed: u64) -> Result<(Vec<WeightedPoint>, Vec<WeightedPoint>), String> {
    let mut all = synth_mixture(&skewed_spec(seed), 1_000_000).map_err(|e| e.to_string())?;
    let held = all.split_off(500_000);
    Ok((all, held))
}

fn balance_improvement() -> Outcome {
    let (train, held) = held_out_split(6)?;
    let model = BalancedModel::fit(&train, 8).map_err(|e| e.to_string())?;
    let per_bit = |scheme| {
        entropy_curve(&held, scheme, &[8])
            .map(|r| r.rows[0].entropy_per_bit)
            .map_err(|e| e.to_string())
    };
    let balanced = per_bit(Scheme::Balanced(&model))?;
    let standard = per_bit(Scheme::Standard)?;
    check(balanced >= 0.97, format!("balanced {balanced}"))?;
    check(
        balanced > standard,
        format!("balanced {balanced} ≤ standard {standard}"),
    )?;
    check(standard <= 0.90, format!("standard {standard}"))?;
    Ok(format!(
        "entropy/bit at 8 bits: balanced {balanced:.4}, standard {standard:.4}"
    ))
}

fn discreteness_saturation() -> Outcome {
    let pts: Vec<WeightedPoint> = (0..1u64 << 10)
        .map(|code| {
            let r = cell_rect(code, 10);
            WeightedPoint::unit(
                GeoPoint::new((r.lat_min + r.lat_max) / 2.0, (r.lon_min + r.lon_max) / 2.0)
                    .unwrap(),
            )
        })
        .collect();
    let bits: Vec<u8> = (10..=60).collect();
    let report = entropy_curve(&pts, Scheme::Standard, &bits).map_err(|e| e.to_string())?;
    for row in &report.rows {
        check(
            (row.entropy - 10.0).abs() <= 1e-9,
            format!("entropy {} at {} bits", row.entropy, row.bits),
        )?;
        let expected = 10.0 / row.bits as f64;
        check(
            (row.entropy_per_bit - expected).abs() <= 1e-9,
            format!("per-bit {} at {}", row.entropy_per_bit, row.bits),
        )?;
    }
    let at60 = report.row("standard", 60).unwrap().entropy;
    Ok(format!("H(60) = {at60}; per-bit = 10/m for m in 10..=60"))
}

fn planner_soundness() -> Outcome {
    let mut inside = 0;
    for seed in 0..100u64 {
        let out = planner_scenario(seed, 10_000);
        check(
            out.false_negatives == 0,
            format!("scenario {seed}: {} false negatives", out.false_negatives),
        )?;
        check(
            out.range_count <= out.max_ranges,
            format!("scenario {seed}: {} > {}", out.range_count, out.max_ranges),
        )?;
        inside += out.inside;
    }
    Ok(format!(
        "100 scenarios, {inside} in-region points, no false negatives"
    ))
}

fn load_balance_proxy() -> Outcome {
    let (train, held) = held_out_split(9)?;
    let model = BalancedModel::fit(&train, 10).map_err(|e| e.to_string())?;
    let ratio = |scheme| {
        bucket_histogram(&held, scheme, 8)
            .map(|h| max_over_mean(&h))
            .map_err(|e| e.to_string())
    };
    let balanced = ratio(Scheme::Balanced(&model))?;
    let standard = ratio(Scheme::Standard)?;
    check(balanced <= 3.0, format!("balanced max/mean {balanced}"))?;
    check(standard >= 10.0, format!("standard max/mean {standard}"))?;
    Ok(format!(
        "heaviest 8-bit bucket / mean: balanced {balanced:.2}, standard {standard:.2}"
    ))
}

fn serialization() -> Outcome {
    let pts = synth_mixture(&skewed_spec(10), 10_000).map_err(|e| e.to_string())?;
    let model = BalancedModel::fit(&pts, 8).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("m.bgh");
    model.save(&path).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    check(
        bytes.len() == 2084,
        format!("file is {} bytes", bytes.len()),
    )?;
    let loaded = BalancedModel::load(&path).map_err(|e| e.to_string())?;
    check(
        loaded == model && loaded.to_bytes() == bytes,
        "round trip differs",
    )?;
    let mut corrupt = bytes.clone();
    corrupt[1000] ^= 0x10;
    match BalancedModel::from_bytes(&corrupt) {
        Err(Error::Load {
            check: LoadCheck::Checksum,
            ..
        }) => {}
        other => {
            return Err(format!(
                "corruption not detected as checksum failure: {other:?}"
            ))
        }
    }
    Ok("2084 bytes, bit-exact round trip, corruption rejected".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("geohash conformance", 1, geohash_conformance),
        ("monotone refinement", 10, monotone_refinement),
        ("uniform identity recovery", 30, uniform_identity_recovery),
        ("entropy guarantee trials", 300, theorem_trials),
        ("bound calculator", 1, bound_calculator),
        ("balance improvement", 120, balance_improvement),
        ("discreteness saturation", 10, discreteness_saturation),
        ("query planner soundness", 120, planner_soundness),
        ("load balance proxy", 120, load_balance_proxy),
        ("serialization", 1, serialization),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed >= Duration::from_secs(*limit) => {
                Err(format!("{detail}; exceeded {limit} s"))
            }
            other => other,
        };
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if result.is_err() {
            failures += 1;
        }
        println!(
            "criterion {:>2} {status} {name} [{:.3} s < {limit} s]: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
