//! GeoJSON rendering of balanced buckets.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geohash::CellRect;
use crate::model::BucketRegion;

/// Counterclockwise closed ring in lon-lat order.
fn ring(r: &CellRect) -> Value {
    json!([[
        [r.lon_min, r.lat_min],
        [r.lon_max, r.lat_min],
        [r.lon_max, r.lat_max],
        [r.lon_min, r.lat_max],
        [r.lon_min, r.lat_min]
    ]])
}

/// One feature per bucket, in prefix order. Empty buckets carry an empty
/// MultiPolygon and `empty: true`.
pub fn export_buckets_geojson(regions: &[BucketRegion]) -> Result<String> {
    if regions.is_empty() {
        return Err(Error::arg("no bucket regions to export"));
    }
    let features: Vec<Value> = regions
        .iter()
        .map(|region| {
            let polygons: Vec<Value> = region.rects().iter().map(ring).collect();
            json!({
                "type": "Feature",
                "properties": {
                    "prefix": region.prefix.to_string(),
                    "index": region.prefix.code(),
                    "empty": region.is_empty(),
                },
                "geometry": { "type": "MultiPolygon", "coordinates": polygons },
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    Ok(serde_json::to_string(&doc)?)
}
