use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bgeohash::entropy::{entropy_curve, theorem_bound, EntropyReport, Scheme};
use bgeohash::geohash::{self, CellRect, HashCode, UnitPoint};
use bgeohash::geojson::export_buckets_geojson;
use bgeohash::ingest::{read_points_csv, synth_mixture, write_points_csv, MixtureSpec};
use bgeohash::io::write_atomic;
use bgeohash::model::{bucket_regions, BalancedModel, WeightedPoint};
use bgeohash::plan::plan_query_within;
use bgeohash::stkey::{make_key_unit, StKey, StKeyConfig};
use chrono::{DateTime, NaiveDate};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bgeohash", version, about = "Entropy-balanced geohash toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a balanced model from a lat,lon[,weight] CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        q: u8,
        #[arg(long)]
        output: PathBuf,
    },
    /// Encode a coordinate, or build a spatiotemporal key when --time is given.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lat: String,
        #[arg(long, allow_hyphen_values = true)]
        lon: String,
        #[arg(long, default_value_t = 40)]
        bits: u8,
        /// ISO-8601 timestamp (UTC offset required, or a bare date).
        #[arg(long)]
        time: Option<String>,
        #[arg(long, default_value_t = 86_400)]
        resolution: u64,
        #[arg(long, default_value_t = 20)]
        prefix_bits: u8,
        #[arg(long, default_value_t = 20)]
        suffix_bits: u8,
    },
    /// Decode a base-32 balanced hash or a spatiotemporal key to its standard-hash interval.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        key: String,
    },
    /// Entropy of prefix bucketings as CSV.
    Entropy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated prefix lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        bits: Vec<u8>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Entropy guarantee of a balanced hash fitted on n unique points.
    Bound {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: u64,
        /// Fraction of the maximum entropy, as a decimal or p/q.
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 4)]
        digits: usize,
    },
    /// Export the geographic footprint of every prefix bucket as GeoJSON.
    Buckets {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prefix_bits: u8,
        #[arg(long)]
        depth_cap: u8,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Plan key-range scans for a bounding box and time window.
    Plan {
        #[arg(long)]
        model: PathBuf,
        /// min_lon,min_lat,max_lon,max_lat
        #[arg(long, allow_hyphen_values = true)]
        bbox: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        resolution: u64,
        #[arg(long)]
        prefix_bits: u8,
        #[arg(long, default_value_t = 0)]
        suffix_bits: u8,
        #[arg(long)]
        max_ranges: usize,
        /// Earliest stored timestamp, for cost accounting.
        #[arg(long)]
        data_from: Option<String>,
        /// Latest stored timestamp, for cost accounting.
        #[arg(long)]
        data_to: Option<String>,
        #[arg(long, value_enum, default_value_t = PlanFormat::Text)]
        format: PlanFormat,
    },
    /// Generate seeded synthetic points from a mixture spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        /// Overrides the seed stored in the spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Standard,
    Balanced,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanFormat {
    Text,
    Json,
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<WeightedPoint>> {
    let file = File::open(path).with_context(|| format!("{}", path.display()))?;
    read_points_csv(BufReader::new(file)).with_context(|| format!("{}", path.display()))
}

fn parse_time(text: &str) -> Result<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(d
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_utc()
            .timestamp());
    }
    bail!("invalid ISO-8601 timestamp {text:?}")
}

fn parse_fraction(text: &str) -> Result<f64> {
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p
                .trim()
                .parse()
                .with_context(|| format!("invalid fraction {text:?}"))?;
            let q: f64 = q
                .trim()
                .parse()
                .with_context(|| format!("invalid fraction {text:?}"))?;
            p / q
        }
        None => text
            .parse()
            .with_context(|| format!("invalid number {text:?}"))?,
    };
    Ok(value)
}

fn parse_bbox(text: &str) -> Result<CellRect> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("invalid bbox {text:?}"))?;
    let [min_lon, min_lat, max_lon, max_lat] = parts[..] else {
        bail!("bbox needs four values min_lon,min_lat,max_lon,max_lat");
    };
    Ok(CellRect::new(min_lat, max_lat, min_lon, max_lon)?)
}

fn render_code(code: &HashCode) -> String {
    if code.bits().is_multiple_of(5) {
        geohash::render_base32(code).expect("multiple of five bits")
    } else {
        code.to_string()
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { input, q, output } => {
            let points = read_points(&input)?;
            let model = BalancedModel::fit(&points, q)?;
            model.save(&output)?;
            log::info!(
                "fitted q={} on {} distinct hashes, total weight {}",
                model.depth(),
                model.n_points(),
                model.total_weight()
            );
        }
        Command::Encode {
            model,
            lat,
            lon,
            bits,
            time,
            resolution,
            prefix_bits,
            suffix_bits,
        } => {
            let model = BalancedModel::load(&model)?;
            let unit = UnitPoint::from_decimal(&lat, &lon)?;
            let line = match time {
                Some(t) => {
                    let config = StKeyConfig::new(prefix_bits, resolution, suffix_bits)?;
                    make_key_unit(&config, &model, &unit, parse_time(&t)?)?.to_string()
                }
                None => render_code(&model.encode_unit(&unit, bits)?),
            };
            println!("{line}");
        }
        Command::Decode { model, key } => {
            let model = BalancedModel::load(&model)?;
            let (code, time_bucket) = if key.contains(':') {
                let k = StKey::parse(&key)?;
                (k.spatial_code(), Some(k.time_bucket))
            } else {
                (geohash::parse_base32(&key)?, None)
            };
            let iv = model.decode(&code);
            let doc = json!({
                "bits": code.to_string(),
                "time_bucket": time_bucket,
                "start": iv.start.to_f64(),
                "end": iv.end.to_f64(),
                "start_raw": iv.start.raw(),
                "end_raw": iv.end.raw(),
                "empty": iv.is_empty(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Command::Entropy {
            input,
            model,
            bits,
            scheme,
            output,
        } => {
            let points = read_points(&input)?;
            let model = model.map(|p| BalancedModel::load(&p)).transpose()?;
            let scheme = scheme.unwrap_or(if model.is_some() {
                SchemeArg::Both
            } else {
                SchemeArg::Standard
            });
            let mut report = EntropyReport::default();
            if scheme != SchemeArg::Balanced {
                report.extend(entropy_curve(&points, Scheme::Standard, &bits)?);
            }
            if scheme != SchemeArg::Standard {
                let Some(model) = &model else {
                    bail!(
                        "--scheme {} needs --model",
                        if scheme == SchemeArg::Both {
                            "both"
                        } else {
                            "balanced"
                        }
                    );
                };
                report.extend(entropy_curve(&points, Scheme::Balanced(model), &bits)?);
            }
            emit(output.as_deref(), report.to_csv().as_bytes())?;
        }
        Command::Bound { q, n, a, digits } => {
            let bound = theorem_bound(q, n, parse_fraction(&a)?)?;
            println!("threshold {:.*}", digits, bound.threshold);
            println!("probability {:.*}", digits, bound.probability_lower_bound);
        }
        Command::Buckets {
            model,
            prefix_bits,
            depth_cap,
            output,
        } => {
            let model = BalancedModel::load(&model)?;
            let regions = bucket_regions(&model, prefix_bits, depth_cap)?;
            emit(
                output.as_deref(),
                export_buckets_geojson(&regions)?.as_bytes(),
            )?;
        }
        Command::Plan {
            model,
            bbox,
            from,
            to,
            resolution,
            prefix_bits,
            suffix_bits,
            max_ranges,
            data_from,
            data_to,
            format,
        } => {
            let model = BalancedModel::load(&model)?;
            let config = StKeyConfig::new(prefix_bits, resolution, suffix_bits)?;
            let extent = match (data_from, data_to) {
                (Some(a), Some(b)) => Some((parse_time(&a)?, parse_time(&b)?)),
                (None, None) => None,
                _ => bail!("--data-from and --data-to must be given together"),
            };
            let plan = plan_query_within(
                &config,
                &model,
                &parse_bbox(&bbox)?,
                parse_time(&from)?,
                parse_time(&to)?,
                max_ranges,
                extent,
            )?;
            match format {
                PlanFormat::Text => print!("{}", plan.to_text()),
                PlanFormat::Json => println!("{}", plan.to_json()?),
            }
        }
        Command::Synth {
            spec,
            n,
            seed,
            output,
        } => {
            let text =
                std::fs::read_to_string(&spec).with_context(|| format!("{}", spec.display()))?;
            let mut spec =
                MixtureSpec::from_json(&text).with_context(|| format!("{}", spec.display()))?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let points = synth_mixture(&spec, n)?;
            let mut buf = Vec::new();
            write_points_csv(&mut buf, &points)?;
            emit(output.as_deref(), &buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
