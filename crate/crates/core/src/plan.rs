//! Range-query planning over spatiotemporal keys.
//!
//! A query (rectangle × time window) becomes a set of key ranges in three
//! steps. The rectangle is covered by standard geohash cells (quadtree
//! descent), each cell's hash interval is pushed through the balanced map
//! and rounded outward to the prefix grid. Every covered prefix then yields
//! one time-exact range. When the range budget is exceeded, adjacent ranges
//! are coalesced: a range spanning prefixes `a..=b` scans `a` from the start
//! bucket onward, everything in between, and `b` up to the end bucket.
//!
//! Cost metrics use the model's measure: every balanced prefix holds an equal
//! share `2^-p` of the data, and data is spread evenly over the time buckets
//! of a configurable extent (by default the whole representable key range).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{Fix63, HashInterval, FRAC_BITS};
use crate::geohash::{cell_unit_bounds, rect_unit_bounds, CellRect, MAX_BITS};
use crate::model::{BalancedModel, DyadicCell};
use crate::stkey::{hex_field, StKeyConfig, MAX_TIME_BUCKET, TIME_DIGITS};

/// Cells examined by one rectangle cover before refinement stops.
pub const MAX_COVER_NODES: usize = 1 << 20;

/// Partial cells are refined until their image is this many bits finer than the grid.
const MEASURE_REFINE_BITS: u32 = 4;

/// Inclusive-exclusive range of rendered keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct KeyRange {
    pub start: String,
    pub end: String,
}

impl KeyRange {
    pub fn contains(&self, key: &str) -> bool {
        self.start.as_str() <= key && key < self.end.as_str()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPlan {
    pub ranges: Vec<KeyRange>,
    pub range_count: usize,
    /// Scanned measure over the query's own measure, minus one.
    pub false_positive_measure: f64,
    /// Largest single-range share of the scanned measure.
    pub max_range_share: f64,
}

impl QueryPlan {
    /// One `start<TAB>end` line per range and a summary trailer.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.ranges {
            out.push_str(&r.start);
            out.push('\t');
            out.push_str(&r.end);
            out.push('\n');
        }
        out.push_str(&format!(
            "# ranges={} fp={} max_share={}\n",
            self.range_count, self.false_positive_measure, self.max_range_share
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Whether a rendered key falls inside one of the ranges.
    pub fn covers(&self, key: &str) -> bool {
        let i = self.ranges.partition_point(|r| r.end.as_str() <= key);
        self.ranges.get(i).is_some_and(|r| r.contains(key))
    }
}

/// Grid-aligned balanced intervals covering a rectangle, plus an estimate of
/// the rectangle's own balanced measure.
#[derive(Debug, Clone)]
struct SpatialCover {
    intervals: Vec<HashInterval>,
    exact_measure: f64,
}

fn check_bits(m: u8) -> Result<()> {
    if m == 0 || m > MAX_BITS {
        return Err(Error::arg(format!("bit count {m} not in 1..=60")));
    }
    Ok(())
}

fn spatial_cover(model: &BalancedModel, bbox: &CellRect, m: u8) -> Result<SpatialCover> {
    bbox.validate()?;
    check_bits(m)?;
    let (qx_lo, qx_hi, qy_lo, qy_hi) = rect_unit_bounds(bbox);
    let grid = m as u32;
    let step = Fix63::grid_step(grid);

    let mut intervals: Vec<HashInterval> = Vec::new();
    let mut exact = 0.0f64;
    let mut visited = 0usize;
    // Depth-first in Z order so images arrive sorted.
    let mut stack = vec![DyadicCell { code: 0, depth: 0 }];
    while let Some(cell) = stack.pop() {
        visited += 1;
        let (x_lo, x_hi, y_lo, y_hi) = cell_unit_bounds(cell.code, cell.depth);
        let ox = x_hi.min(qx_hi).checked_sub(x_lo.max(qx_lo));
        let oy = y_hi.min(qy_hi).checked_sub(y_lo.max(qy_lo));
        let (Some(ox), Some(oy)) = (ox, oy) else {
            continue;
        };
        let contained = x_lo >= qx_lo && x_hi <= qx_hi && y_lo >= qy_lo && y_hi <= qy_hi;
        let std = cell.interval();
        let first = model.forward(std.start);
        let last = model.forward(Fix63::from_raw(std.end.raw() - 8));
        let start = first.grid_floor(grid);
        let end = Fix63::from_raw(last.grid_floor(grid).raw() + step);
        // partial cells keep splitting below the grid to sharpen the measure estimate
        let refine = !contained
            && cell.depth < MAX_BITS
            && last.raw() - first.raw() > step >> MEASURE_REFINE_BITS
            && visited + stack.len() < MAX_COVER_NODES;
        if refine {
            let child = cell.depth + 1;
            stack.push(DyadicCell {
                code: cell.code * 2 + 1,
                depth: child,
            });
            stack.push(DyadicCell {
                code: cell.code * 2,
                depth: child,
            });
            continue;
        }
        let image = HashInterval::new(first, model.forward(std.end)).measure();
        let fraction = if contained {
            1.0
        } else {
            ((ox as f64 + 1.0) / (x_hi - x_lo + 1) as f64)
                * ((oy as f64 + 1.0) / (y_hi - y_lo + 1) as f64)
        };
        exact += image * fraction.min(1.0);
        match intervals.last_mut() {
            Some(prev) if start <= prev.end => prev.end = prev.end.max(end),
            _ => intervals.push(HashInterval::new(start, end)),
        }
    }
    Ok(SpatialCover {
        intervals,
        exact_measure: exact,
    })
}

/// Indices of the `count` smallest gaps, ties broken by position.
fn smallest_gaps(gaps: &[u64], count: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by_key(|&i| (gaps[i], i));
    let mut close = vec![false; gaps.len()];
    for &i in order.iter().take(count) {
        close[i] = true;
    }
    close
}

/// Balanced-hash intervals on the `m`-bit grid whose union contains the
/// balanced image of `bbox`. At most `max_intervals` intervals are returned;
/// excess intervals are merged across the smallest gaps.
pub fn cover_bbox(
    model: &BalancedModel,
    bbox: &CellRect,
    m: u8,
    max_intervals: usize,
) -> Result<Vec<HashInterval>> {
    if max_intervals == 0 {
        return Err(Error::arg("interval budget must be at least 1"));
    }
    let cover = spatial_cover(model, bbox, m)?;
    let intervals = cover.intervals;
    if intervals.len() <= max_intervals {
        return Ok(intervals);
    }
    let gaps: Vec<u64> = intervals
        .windows(2)
        .map(|w| w[1].start.raw() - w[0].end.raw())
        .collect();
    let close = smallest_gaps(&gaps, intervals.len() - max_intervals);
    let mut merged: Vec<HashInterval> = vec![intervals[0]];
    for (iv, closed) in intervals[1..].iter().zip(close) {
        if closed {
            merged.last_mut().expect("non-empty").end = iv.end;
        } else {
            merged.push(*iv);
        }
    }
    Ok(merged)
}

/// A run of consecutive prefixes `first..=last` scanned as one key range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    first: u64,
    last: u64,
}

/// Number of buckets in `lo..=hi`, zero when empty.
fn span(lo: u64, hi: u64) -> u64 {
    if hi >= lo {
        hi - lo + 1
    } else {
        0
    }
}

/// Time-side bookkeeping for range measures, in units of prefix-buckets.
struct TimeModel {
    t0: u64,
    t1: u64,
    e0: u64,
    e1: u64,
}

impl TimeModel {
    /// Buckets of one prefix inside the query window.
    fn window(&self) -> u64 {
        span(self.t0.max(self.e0), self.t1.min(self.e1))
    }

    /// Prefix-buckets scanned by a run.
    fn run_measure(&self, run: &Run) -> u128 {
        if run.first == run.last {
            return self.window() as u128;
        }
        let head = span(self.t0.max(self.e0), self.e1) as u128;
        let tail = span(self.e0, self.t1.min(self.e1)) as u128;
        let middle = (run.last - run.first - 1) as u128 * span(self.e0, self.e1) as u128;
        head + middle + tail
    }

    /// Extra prefix-buckets scanned when two adjacent prefixes share a range.
    fn adjacent_join_cost(&self) -> u64 {
        let after = span((self.t1 + 1).max(self.e0), self.e1);
        let before = match self.t0.checked_sub(1) {
            Some(b) => span(self.e0, b.min(self.e1)),
            None => 0,
        };
        after + before
    }
}

fn render_start(prefix: u64, bits: u8, bucket: u64) -> String {
    format!(
        "{}:{:0td$}:",
        hex_field(prefix, bits),
        bucket,
        td = TIME_DIGITS
    )
}

fn render_end(prefix: u64, bits: u8, last_bucket: u64) -> String {
    if last_bucket >= MAX_TIME_BUCKET {
        // ';' sorts after every digit, closing out the whole prefix
        format!("{}:;", hex_field(prefix, bits))
    } else {
        render_start(prefix, bits, last_bucket + 1)
    }
}

/// Splits `k` prefixes starting at `first` into `r` runs of near-equal size.
fn split_evenly(first: u64, k: u64, r: u64, out: &mut Vec<Run>) {
    let base = k / r;
    let extra = k % r;
    let mut at = first;
    for i in 0..r {
        let len = base + (i < extra) as u64;
        out.push(Run {
            first: at,
            last: at + len - 1,
        });
        at += len;
    }
}

/// Shares `budget` ranges among prefix intervals of sizes `sizes`, at least
/// one each and never more than the interval's size.
fn allocate(sizes: &[u64], budget: u64) -> Vec<u64> {
    let spare_total: u128 = sizes.iter().map(|&k| (k - 1) as u128).sum();
    let spare_budget = (budget - sizes.len() as u64) as u128;
    let mut alloc: Vec<u64> = Vec::with_capacity(sizes.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(sizes.len());
    for (i, &k) in sizes.iter().enumerate() {
        let share = spare_budget * (k - 1) as u128;
        alloc.push(1 + (share / spare_total) as u64);
        remainders.push((share % spare_total, i));
    }
    let mut left = budget - alloc.iter().sum::<u64>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &remainders {
        if left == 0 {
            break;
        }
        if alloc[i] < sizes[i] {
            alloc[i] += 1;
            left -= 1;
        }
    }
    alloc
}

/// Plans key ranges for `bbox × [t_start, t_end]` assuming data may exist in
/// every representable time bucket.
pub fn plan_query(
    config: &StKeyConfig,
    model: &BalancedModel,
    bbox: &CellRect,
    t_start: i64,
    t_end: i64,
    max_ranges: usize,
) -> Result<QueryPlan> {
    plan_query_within(config, model, bbox, t_start, t_end, max_ranges, None)
}

/// Like [`plan_query`], with stored data confined to the epoch-second range
/// `data_extent` (inclusive). The extent only affects cost accounting and the
/// choice of which ranges to coalesce; coverage guarantees are unchanged.
pub fn plan_query_within(
    config: &StKeyConfig,
    model: &BalancedModel,
    bbox: &CellRect,
    t_start: i64,
    t_end: i64,
    max_ranges: usize,
    data_extent: Option<(i64, i64)>,
) -> Result<QueryPlan> {
    config.validate()?;
    if max_ranges == 0 {
        return Err(Error::arg("max_ranges must be at least 1"));
    }
    if t_start > t_end {
        return Err(Error::arg(format!(
            "time window [{t_start}, {t_end}] is reversed"
        )));
    }
    let t0 = config.time_bucket(t_start)?;
    let t1 = config.time_bucket(t_end)?;
    let (e0, e1) = match data_extent {
        None => (0, MAX_TIME_BUCKET),
        Some((a, b)) if a <= b => (config.time_bucket(a)?, config.time_bucket(b)?),
        Some((a, b)) => return Err(Error::arg(format!("data extent [{a}, {b}] is reversed"))),
    };
    let time = TimeModel { t0, t1, e0, e1 };
    let p = config.prefix_bits;

    let cover = spatial_cover(model, bbox, p)?;
    let shift = FRAC_BITS - p as u32;
    // prefix intervals [first, first + size)
    let blocks: Vec<(u64, u64)> = cover
        .intervals
        .iter()
        .map(|iv| {
            let first = iv.start.raw() >> shift;
            (first, (iv.end.raw() >> shift) - first)
        })
        .collect();
    let total_prefixes: u128 = blocks.iter().map(|&(_, k)| k as u128).sum();
    let budget = max_ranges as u128;
    let free_joins = time.adjacent_join_cost() == 0;

    let mut runs: Vec<Run> = Vec::new();
    if !free_joins && total_prefixes <= budget {
        for &(first, k) in &blocks {
            runs.extend((first..first + k).map(|c| Run { first: c, last: c }));
        }
    } else if !free_joins && blocks.len() as u128 <= budget {
        let sizes: Vec<u64> = blocks.iter().map(|&(_, k)| k).collect();
        let alloc = allocate(&sizes, max_ranges as u64);
        for (&(first, k), r) in blocks.iter().zip(alloc) {
            split_evenly(first, k, r, &mut runs);
        }
    } else {
        runs.extend(blocks.iter().map(|&(first, k)| Run {
            first,
            last: first + k - 1,
        }));
        if runs.len() > max_ranges {
            let gaps: Vec<u64> = runs.windows(2).map(|w| w[1].first - w[0].last).collect();
            let close = smallest_gaps(&gaps, runs.len() - max_ranges);
            let mut merged = vec![runs[0]];
            for (run, closed) in runs[1..].iter().zip(close) {
                if closed {
                    merged.last_mut().expect("non-empty").last = run.last;
                } else {
                    merged.push(*run);
                }
            }
            runs = merged;
        }
    }

    let prefix_share = (-(p as f64)).exp2();
    let measures: Vec<f64> = runs
        .iter()
        .map(|r| time.run_measure(r) as f64 * prefix_share)
        .collect();
    let planned: f64 = measures.iter().sum();
    let query = cover.exact_measure * time.window() as f64;
    let false_positive_measure = if planned <= 0.0 {
        0.0
    } else if query <= 0.0 {
        f64::INFINITY
    } else {
        (planned / query - 1.0).max(0.0)
    };
    let max_range_share = if planned > 0.0 {
        measures.iter().cloned().fold(0.0, f64::max) / planned
    } else {
        1.0
    };
    let ranges: Vec<KeyRange> = runs
        .iter()
        .map(|r| KeyRange {
            start: render_start(r.first, p, t0),
            end: render_end(r.last, p, t1),
        })
        .collect();
    Ok(QueryPlan {
        range_count: ranges.len(),
        ranges,
        false_positive_measure,
        max_range_share,
    })
}
