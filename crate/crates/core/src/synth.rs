//! Deterministic synthetic incident generators.
//!
//! Scenarios place Gaussian blobs per year, either at fixed centers
//! (stationary) or at centers shifted by `year_index * drift` (drifting),
//! plus uniform background noise. Every year draws from its own ChaCha
//! stream keyed by the calendar year, so output does not depend on the
//! order years are generated in.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Bounds, GeoPoint};
use crate::polygon::{HolcGrade, HolcLayer, Polygon, PolygonLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioMode {
    Stationary,
    Drifting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mode: ScenarioMode,
    pub years: Vec<i32>,
    pub centers: Vec<GeoPoint>,
    /// Per-axis standard deviation of each blob, in degrees.
    pub sigma: f64,
    pub points_per_cluster: usize,
    /// (lat, lon) displacement per year; ignored when stationary.
    pub drift_per_year: (f64, f64),
    /// Share of each year's points drawn uniformly from `bounds`.
    pub background_fraction: f64,
    pub bounds: Bounds,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self, min_pts: usize) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.points_per_cluster < min_pts {
            return Err(Error::InvalidParameter(format!("points_per_cluster {} is below min_pts {min_pts}", self.points_per_cluster)));
        }
        if self.centers.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one center".into()));
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(Error::InvalidParameter("background_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Generative blob centers for the year at position `year_index`.
    pub fn centers_for(&self, year_index: usize) -> Vec<GeoPoint> {
        match self.mode {
            ScenarioMode::Stationary => self.centers.clone(),
            ScenarioMode::Drifting => {
                let k = year_index as f64;
                self.centers.iter().map(|c| c.translate(k * self.drift_per_year.0, k * self.drift_per_year.1)).collect()
            }
        }
    }

    /// Background points per year for the configured fraction.
    pub fn background_count(&self) -> usize {
        let blob_points = (self.centers.len() * self.points_per_cluster) as f64;
        (self.background_fraction / (1.0 - self.background_fraction) * blob_points).round() as usize
    }
}

/// `n` i.i.d. uniform points in `bounds`.
pub fn gen_uniform(n: usize, bounds: &Bounds, seed: u64) -> Result<Vec<GeoPoint>> {
    if !bounds.has_area() {
        return Err(Error::InvalidParameter(format!("degenerate bounds {bounds:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(uniform_points(&mut rng, n, bounds))
}

fn uniform_points(rng: &mut impl Rng, n: usize, bounds: &Bounds) -> Vec<GeoPoint> {
    (0..n).map(|_| bounds.lerp(rng.random(), rng.random())).collect()
}

/// Isotropic Gaussian blob. With `balanced_quadrants`, point `i` is folded
/// into quadrant `i % 4` around the center, giving equal quadrant counts
/// without changing the radial distribution.
fn gaussian_blob(rng: &mut impl Rng, center: GeoPoint, sigma: f64, n: usize, balanced_quadrants: bool) -> Vec<GeoPoint> {
    let normal = Normal::new(0.0, sigma).expect("sigma validated positive");
    (0..n)
        .map(|i| {
            let (mut dlat, mut dlon): (f64, f64) = (normal.sample(rng), normal.sample(rng));
            if balanced_quadrants {
                let (slat, slon) = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)][i % 4];
                dlat = slat * dlat.abs();
                dlon = slon * dlon.abs();
            }
            center.translate(dlat, dlon)
        })
        .collect()
}

fn year_rng(seed: u64, year: i32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(year as u32 as u64);
    rng
}

/// Points per year: blobs first (center order), then background.
pub fn gen_scenario(spec: &ScenarioSpec) -> Result<BTreeMap<i32, Vec<GeoPoint>>> {
    spec.validate(1)?;
    let n_bg = spec.background_count();
    if n_bg > 0 && !spec.bounds.has_area() {
        return Err(Error::InvalidParameter(format!("degenerate bounds {:?}", spec.bounds)));
    }
    let mut out = BTreeMap::new();
    for (k, &year) in spec.years.iter().enumerate() {
        let mut rng = year_rng(spec.seed, year);
        let mut pts = Vec::with_capacity(spec.centers.len() * spec.points_per_cluster + n_bg);
        for c in spec.centers_for(k) {
            pts.extend(gaussian_blob(&mut rng, c, spec.sigma, spec.points_per_cluster, false));
        }
        pts.extend(uniform_points(&mut rng, n_bg, &spec.bounds));
        out.insert(year, pts);
    }
    Ok(out)
}

/// One synthetic incident, ready to be written as a crime CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthIncident {
    pub district: u32,
    pub year: i32,
    pub location: GeoPoint,
}

pub fn incidents_from_scenario(district: u32, by_year: &BTreeMap<i32, Vec<GeoPoint>>) -> Vec<SynthIncident> {
    by_year.iter().flat_map(|(&year, pts)| pts.iter().map(move |&location| SynthIncident { district, year, location })).collect()
}

/// Write incidents with the default ingest column names. Dates cycle
/// deterministically through the year.
pub fn write_crime_csv(incidents: &[SynthIncident], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dc_dist", "dispatch_date_time", "location_block", "lat", "lng"])?;
    for (i, inc) in incidents.iter().enumerate() {
        let month = 1 + i % 12;
        let day = 1 + (i / 12) % 28;
        w.write_record([
            inc.district.to_string(),
            format!("{:04}-{month:02}-{day:02} 12:00:00", inc.year),
            format!("{} BLOCK SYNTHETIC ST", 100 * (1 + i % 50)),
            inc.location.lat.to_string(),
            inc.location.lon.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// District ids of the 21-district synthetic city.
pub const CITY_DISTRICTS: [u32; 21] = [1, 2, 3, 5, 6, 7, 8, 9, 12, 14, 15, 16, 17, 18, 19, 22, 24, 25, 26, 35, 39];
/// Districts whose blobs drift in the synthetic city.
pub const CITY_DRIFTING: [u32; 10] = [2, 5, 7, 8, 14, 15, 24, 26, 35, 39];
pub const CITY_SIGMA: f64 = 0.001;
pub const CITY_YEARS: std::ops::RangeInclusive<i32> = 2012..=2022;

/// Tile of the synthetic city assigned to district slot `slot` (7 x 3 grid
/// of 0.04 x 0.05 degree tiles over Philadelphia).
pub fn city_tile(slot: usize) -> Bounds {
    let (row, col) = ((slot / 7) as f64, (slot % 7) as f64);
    let min_lat = 39.90 + 0.04 * row;
    let min_lon = -75.30 + 0.05 * col;
    Bounds { min_lat, max_lat: min_lat + 0.04, min_lon, max_lon: min_lon + 0.05 }
}

/// Scenario for one district of the synthetic city. `drift_sigmas` scales
/// the per-year displacement; drifting districts use 3.
pub fn city_district_spec(slot: usize, drifting: bool, drift_sigmas: f64, seed: u64) -> ScenarioSpec {
    let tile = city_tile(slot);
    let at = |u: f64, v: f64| tile.lerp(u, v);
    ScenarioSpec {
        mode: if drifting { ScenarioMode::Drifting } else { ScenarioMode::Stationary },
        years: CITY_YEARS.collect(),
        centers: vec![at(0.3, 0.2), at(0.7, 0.35), at(0.4, 0.6)],
        sigma: CITY_SIGMA,
        points_per_cluster: 40,
        drift_per_year: (0.0, drift_sigmas * CITY_SIGMA),
        background_fraction: 0.1,
        bounds: tile,
        seed: seed.wrapping_add(slot as u64),
    }
}

/// All 21 districts of the synthetic city: (district id, scenario).
pub fn synthetic_city(seed: u64) -> Vec<(u32, ScenarioSpec)> {
    CITY_DISTRICTS.iter().enumerate().map(|(slot, &d)| (d, city_district_spec(slot, CITY_DRIFTING.contains(&d), 3.0, seed))).collect()
}

pub fn city_incidents(seed: u64) -> Result<Vec<SynthIncident>> {
    let mut out = Vec::new();
    for (district, spec) in synthetic_city(seed) {
        out.extend(incidents_from_scenario(district, &gen_scenario(&spec)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedlineKind {
    /// Cluster groups sit on differently graded polygons.
    Biased,
    /// Every blob is split evenly across all four grades.
    Uniform,
}

pub const REDLINE_DISTRICT: u32 = 19;

/// One district with a dominant blob and two small ones (pooled over all
/// years), plus a HOLC layer of squares around each blob.
pub fn redline_fixture(kind: RedlineKind, seed: u64) -> Result<(Vec<SynthIncident>, HolcLayer)> {
    let sigma = 0.002;
    let half = 4.0 * sigma;
    let centers = [GeoPoint::new(39.98, -75.15), GeoPoint::new(40.01, -75.12), GeoPoint::new(39.95, -75.11)];
    let sizes = [40usize, 8, 8];
    let region = Bounds { min_lat: 39.93, max_lat: 40.03, min_lon: -75.18, max_lon: -75.08 };
    let years: Vec<i32> = CITY_YEARS.collect();

    let mut incidents = Vec::new();
    for &year in &years {
        let mut rng = year_rng(seed, year);
        for (c, n) in centers.iter().zip(sizes) {
            for location in gaussian_blob(&mut rng, *c, sigma, n, kind == RedlineKind::Uniform) {
                incidents.push(SynthIncident { district: REDLINE_DISTRICT, year, location });
            }
        }
        for location in uniform_points(&mut rng, 3, &region) {
            incidents.push(SynthIncident { district: REDLINE_DISTRICT, year, location });
        }
    }

    let rect = |min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64| {
        Polygon::new(
            vec![
                GeoPoint::new(min_lat, min_lon),
                GeoPoint::new(min_lat, max_lon),
                GeoPoint::new(max_lat, max_lon),
                GeoPoint::new(max_lat, min_lon),
            ],
            vec![],
        )
    };
    let mut entries = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        match kind {
            RedlineKind::Biased => {
                use HolcGrade::*;
                let (west, east) = [(D, C), (B, C), (B, A)][i];
                entries.push((rect(c.lat - half, c.lat + half, c.lon - half, c.lon)?, west));
                entries.push((rect(c.lat - half, c.lat + half, c.lon, c.lon + half)?, east));
            }
            RedlineKind::Uniform => {
                // Quadrant order matches `gaussian_blob`'s folding.
                let quads = [
                    (rect(c.lat, c.lat + half, c.lon, c.lon + half)?, HolcGrade::A),
                    (rect(c.lat, c.lat + half, c.lon - half, c.lon)?, HolcGrade::B),
                    (rect(c.lat - half, c.lat, c.lon - half, c.lon)?, HolcGrade::C),
                    (rect(c.lat - half, c.lat, c.lon, c.lon + half)?, HolcGrade::D),
                ];
                entries.extend(quads);
            }
        }
    }
    Ok((incidents, PolygonLayer { entries }))
}
