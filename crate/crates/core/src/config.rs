//! Run configuration, loadable from TOML. Command-line flags override
//! individual keys after loading.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::DEFAULT_MIN_PTS;
use crate::error::{Error, Result};
use crate::ingest::{ColumnSchema, DEFAULT_REMOVED_DISTRICTS};
use crate::nsi::{ThresholdMode, DEFAULT_THRESHOLD};
use crate::pipeline::ClusterOptions;
use crate::tendency::{HopkinsConfig, DEFAULT_TRIALS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub crime_csv: Option<PathBuf>,
    pub holc_geojson: Option<PathBuf>,
    pub holc_grade_property: String,
    /// Optional district boundaries; records are re-tagged by containment.
    pub district_geojson: Option<PathBuf>,
    pub district_property: String,
    pub output_dir: PathBuf,
    pub columns: ColumnSchema,
    pub year_start: i32,
    pub year_end: i32,
    pub min_pts: usize,
    pub eps: Option<f64>,
    pub threshold: ThresholdMode,
    pub removed_districts: Vec<u32>,
    pub hopkins_sample_size: Option<usize>,
    pub hopkins_trials: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub citywide: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            crime_csv: None,
            holc_geojson: None,
            holc_grade_property: "holc_grade".into(),
            district_geojson: None,
            district_property: "dist_num".into(),
            output_dir: PathBuf::from("out"),
            columns: ColumnSchema::default(),
            year_start: 2012,
            year_end: 2022,
            min_pts: DEFAULT_MIN_PTS,
            eps: None,
            threshold: ThresholdMode::Fixed(DEFAULT_THRESHOLD),
            removed_districts: DEFAULT_REMOVED_DISTRICTS.to_vec(),
            hopkins_sample_size: None,
            hopkins_trials: DEFAULT_TRIALS,
            seed: 0,
            grid_size: 50,
            citywide: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.year_start > self.year_end {
            return Err(Error::Config(format!("year_start {} is after year_end {}", self.year_start, self.year_end)));
        }
        if self.min_pts == 0 {
            return Err(Error::Config("min_pts must be at least 1".into()));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("eps must be positive, got {e}")));
            }
        }
        if let ThresholdMode::Fixed(t) = self.threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("threshold must be positive, got {t}")));
            }
        }
        if self.hopkins_trials == 0 {
            return Err(Error::Config("hopkins_trials must be at least 1".into()));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("grid_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.year_start..=self.year_end
    }

    pub fn removed_set(&self) -> BTreeSet<u32> {
        self.removed_districts.iter().copied().collect()
    }

    pub fn cluster_options(&self) -> ClusterOptions {
        ClusterOptions { min_pts: self.min_pts, eps_override: self.eps }
    }

    pub fn hopkins(&self) -> HopkinsConfig {
        HopkinsConfig { sample_size: self.hopkins_sample_size, trials: self.hopkins_trials, seed: self.seed, bounds: None }
    }
}
