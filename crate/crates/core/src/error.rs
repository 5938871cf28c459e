use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{column}` in csv header")]
    MissingColumn { column: String },

    #[error("malformed geojson: {0}")]
    GeoJson(String),

    #[error("feature {feature} has no property `{property}`")]
    MissingProperty { feature: usize, property: String },

    #[error("feature {feature}: `{value}` is not a HOLC grade (expected A, B, C or D)")]
    InvalidGrade { feature: usize, value: String },

    #[error("invalid polygon ring: {0}")]
    InvalidRing(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("k = {k} out of range for {len} points (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, len: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("cluster {0} has no core points")]
    EmptyCoreSet(usize),

    #[error("need at least 2 non-empty years, got {0}")]
    TooFewYears(usize),

    #[error("year {0} has no records; narrow the year range")]
    EmptyYear(i32),

    #[error("no clusters found")]
    NoClusters,

    #[error("contingency table is empty after excluding {ungraded} ungraded records")]
    EmptyTable { ungraded: usize },

    #[error("column `{0}` has a zero total")]
    ZeroColumnTotal(String),

    #[error("table is {rows}x{cols} after pruning empty rows/columns; need at least 2x2")]
    TableTooSmall { rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable kind, used in CLI error JSON and FFI messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::MissingColumn { .. } => "missing_column",
            Error::GeoJson(_) => "geojson",
            Error::MissingProperty { .. } => "missing_property",
            Error::InvalidGrade { .. } => "invalid_grade",
            Error::InvalidRing(_) => "invalid_ring",
            Error::EmptyInput(_) => "empty_input",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::KOutOfRange { .. } => "k_out_of_range",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::EmptyCoreSet(_) => "empty_core_set",
            Error::TooFewYears(_) => "too_few_years",
            Error::EmptyYear(_) => "empty_year",
            Error::NoClusters => "no_clusters",
            Error::EmptyTable { .. } => "empty_table",
            Error::ZeroColumnTotal(_) => "zero_column_total",
            Error::TableTooSmall { .. } => "table_too_small",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Config(_) => "config",
        }
    }

    /// True for errors caused by how the program was invoked rather than by
    /// the data it was given.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}
