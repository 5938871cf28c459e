//! Hopkins statistic for clustering tendency.
//!
//! `H = U / (U + W)` where `W` sums squared nearest-neighbor distances from
//! sampled real points to the rest of the data and `U` sums squared
//! distances from uniform draws to the nearest real point. Clustered data
//! scores near 1, uniform data near 0.5.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{Bounds, GeoPoint};
use crate::spatial_index::SpatialIndex;

pub const DEFAULT_TRIALS: usize = 100;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct HopkinsConfig {
    /// Probe count per trial; `None` picks [`default_sample_size`].
    pub sample_size: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Region for the uniform probes; `None` uses the points' bounding box.
    pub bounds: Option<Bounds>,
}

impl Default for HopkinsConfig {
    fn default() -> Self {
        HopkinsConfig { sample_size: None, trials: DEFAULT_TRIALS, seed: 0, bounds: None }
    }
}

impl HopkinsConfig {
    pub fn resolved_sample_size(&self, n_points: usize) -> usize {
        self.sample_size.unwrap_or_else(|| default_sample_size(n_points))
    }

    fn validate(&self, n_points: usize) -> Result<usize> {
        if n_points < MIN_POINTS {
            return Err(Error::TooFewPoints { needed: MIN_POINTS, got: n_points });
        }
        let n = self.resolved_sample_size(n_points);
        if n == 0 || n > n_points / 2 {
            return Err(Error::InvalidParameter(format!("hopkins sample size {n} must be in [1, {}] for {n_points} points", n_points / 2)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("hopkins trials must be at least 1".into()));
        }
        Ok(n)
    }
}

/// 5% of the data, capped at 500, at least 10, never more than half.
pub fn default_sample_size(n_points: usize) -> usize {
    (n_points / 20).clamp(10, 500).min(n_points / 2).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopkinsSummary {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
    pub sample_size: usize,
}

/// One Hopkins evaluation driven by `trial_seed`.
pub fn hopkins(points: &[GeoPoint], cfg: &HopkinsConfig, trial_seed: u64) -> Result<f64> {
    let n = cfg.validate(points.len())?;
    let index = SpatialIndex::from_slice(points)?;
    let bounds = resolve_bounds(points, cfg)?;
    Ok(hopkins_trial(&index, n, &bounds, trial_seed))
}

/// Mean and sample standard deviation over `cfg.trials` evaluations whose
/// seeds are drawn up front from `cfg.seed`.
pub fn hopkins_mean(points: &[GeoPoint], cfg: &HopkinsConfig) -> Result<HopkinsSummary> {
    let n = cfg.validate(points.len())?;
    let index = SpatialIndex::from_slice(points)?;
    let bounds = resolve_bounds(points, cfg)?;
    let seeds = trial_seeds(cfg.seed, cfg.trials);
    let values: Vec<f64> = seeds.par_iter().map(|&s| hopkins_trial(&index, n, &bounds, s)).collect();
    let (mean, std) = mean_std(&values);
    Ok(HopkinsSummary { mean, std, trials: cfg.trials, sample_size: n })
}

/// Per-trial seeds derived deterministically from a base seed.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.random()).collect()
}

fn resolve_bounds(points: &[GeoPoint], cfg: &HopkinsConfig) -> Result<Bounds> {
    let bounds = match cfg.bounds {
        Some(b) => b,
        None => Bounds::of_points(points).ok_or(Error::EmptyInput("hopkins needs points"))?,
    };
    if !points.iter().all(|p| bounds.contains(p)) {
        return Err(Error::InvalidParameter("hopkins bounds must contain every point".into()));
    }
    Ok(bounds)
}

fn hopkins_trial(index: &SpatialIndex, n: usize, bounds: &Bounds, trial_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let points = index.points();
    let w: f64 = sample(&mut rng, points.len(), n).iter().map(|i| index.nearest_sq(&points[i], Some(i))).sum();
    let u: f64 = (0..n)
        .map(|_| {
            let probe = bounds.lerp(rng.random(), rng.random());
            index.nearest_sq(&probe, None)
        })
        .sum();
    if u + w == 0.0 {
        0.5
    } else {
        u / (u + w)
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
