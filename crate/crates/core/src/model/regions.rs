use super::BalancedModel;
use crate::error::{Error, Result};
use crate::fixed::{Fix63, HashInterval, FRAC_BITS};
use crate::geohash::{self, CellRect, HashCode, MAX_BITS};

/// Largest prefix length whose buckets are enumerated.
pub const MAX_REGION_BITS: u8 = 24;

/// A standard geohash cell; depth 0 is the whole world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicCell {
    pub code: u64,
    pub depth: u8,
}

impl DyadicCell {
    pub fn rect(&self) -> CellRect {
        geohash::cell_rect(self.code, self.depth)
    }

    pub fn interval(&self) -> HashInterval {
        let shift = FRAC_BITS - self.depth as u32;
        HashInterval::new(
            Fix63::from_raw(self.code << shift),
            Fix63::from_raw((self.code + 1) << shift),
        )
    }

    /// `0`/`1` rendering; empty for the root cell.
    pub fn bit_string(&self) -> String {
        if self.depth == 0 {
            String::new()
        } else {
            format!("{:0width$b}", self.code, width = self.depth as usize)
        }
    }
}

/// Maximal dyadic cells of depth at most `depth_cap` covering `iv`, after
/// rounding its ends outward onto the `depth_cap` grid.
pub fn dyadic_cover(iv: HashInterval, depth_cap: u8) -> Result<Vec<DyadicCell>> {
    if depth_cap > MAX_BITS {
        return Err(Error::arg(format!("depth cap {depth_cap} not in 0..=60")));
    }
    let cap = depth_cap as u32;
    let mut cells = Vec::new();
    if iv.is_empty() {
        return Ok(cells);
    }
    let mut pos = iv.start.grid_floor(cap).raw();
    let end = iv.end.grid_ceil(cap).raw();
    let min_size_log = FRAC_BITS - cap;
    while pos < end {
        let align = if pos == 0 {
            FRAC_BITS
        } else {
            pos.trailing_zeros().min(FRAC_BITS)
        };
        let mut size_log = align;
        while size_log > min_size_log && pos + (1u64 << size_log) > end {
            size_log -= 1;
        }
        let depth = (FRAC_BITS - size_log) as u8;
        cells.push(DyadicCell {
            code: pos >> size_log,
            depth,
        });
        pos += 1u64 << size_log;
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketRegion {
    pub prefix: HashCode,
    /// Standard-hash preimage of the bucket.
    pub interval: HashInterval,
    pub cells: Vec<DyadicCell>,
}

impl BucketRegion {
    pub fn is_empty(&self) -> bool {
        self.interval.is_empty()
    }

    pub fn rects(&self) -> Vec<CellRect> {
        self.cells.iter().map(DyadicCell::rect).collect()
    }
}

/// Geographic footprint of every `k`-bit balanced prefix.
pub fn bucket_regions(model: &BalancedModel, k: u8, depth_cap: u8) -> Result<Vec<BucketRegion>> {
    if k == 0 || k > MAX_REGION_BITS {
        return Err(Error::arg(format!(
            "prefix bits {k} not in 1..={MAX_REGION_BITS}"
        )));
    }
    if depth_cap > MAX_BITS {
        return Err(Error::arg(format!("depth cap {depth_cap} not in 0..=60")));
    }
    if k > model.depth() {
        log::warn!(
            "prefix length {k} exceeds the balance depth {}; deeper buckets are only interpolated",
            model.depth()
        );
    }
    (0..1u64 << k)
        .map(|code| {
            let prefix = HashCode::new(code, k)?;
            let interval = model.decode(&prefix);
            Ok(BucketRegion {
                prefix,
                interval,
                cells: dyadic_cover(interval, depth_cap)?,
            })
        })
        .collect()
}
