//! Entropy-balanced geohashing.
//!
//! A standard geohash interleaves longitude and latitude bits into a point on
//! the Z-order curve. A [`BalancedModel`] rescales that curve monotonically so
//! equal-length prefixes hold roughly equal shares of a fitted data set. The
//! crate fits and stores such models, encodes and decodes through them,
//! measures prefix entropy, builds spatiotemporal row keys and plans range
//! scans over those keys.

pub mod entropy;
pub mod error;
pub mod fixed;
pub mod geohash;
pub mod geojson;
pub mod ingest;
pub mod io;
pub mod model;
pub mod plan;
pub mod stkey;

pub use entropy::{
    entropy, entropy_curve, theorem_bound, BoundResult, EntropyReport, EntropyRow, Scheme,
};
pub use error::{Error, LoadCheck, Result};
pub use fixed::{Fix63, HashInterval};
pub use geohash::{CellRect, GeoPoint, HashCode, UnitPoint};
pub use model::{BalancedModel, WeightedPoint};
pub use plan::{cover_bbox, plan_query, KeyRange, QueryPlan};
pub use stkey::{make_key, make_key_unit, StKey, StKeyConfig};
