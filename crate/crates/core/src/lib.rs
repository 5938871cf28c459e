//! Crime hotspot analysis.
//!
//! Incidents are clustered with DBSCAN per police district and year, with
//! the radius picked at the knee of the k-distance curve. Cluster
//! representatives from different years feed a non-systemic index that
//! separates stationary hotspots from drifting ones. Supporting pieces:
//! Hopkins clustering tendency, HOLC grade assignment and a chi-square
//! test of grade against cluster membership, and synthetic fixtures.

pub mod cli;
pub mod clustering;
pub mod config;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod nsi;
pub mod pipeline;
pub mod polygon;
pub mod report;
pub mod spatial_index;
pub mod special;
pub mod stats;
pub mod synth;
pub mod tendency;

pub use clustering::{dbscan, select_epsilon, Cluster, DbscanLabeling, DbscanParams, Role};
pub use error::{Error, Result};
pub use geo::{Bounds, GeoPoint};
pub use nsi::{set_distance, Classification, NsiResult, ThresholdMode};
pub use polygon::{HolcGrade, HolcLayer};
pub use spatial_index::SpatialIndex;
pub use stats::{chi_square, chi_square_sf, ContingencyTable};
pub use tendency::{hopkins, hopkins_mean, HopkinsConfig};
