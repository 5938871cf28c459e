//! End-to-end analyses over cleaned records.
//!
//! Work is split per (district, year) partition and run on the rayon pool;
//! results are always returned sorted by partition key.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{clusters, dbscan_indexed, select_epsilon_indexed, Cluster, DbscanLabeling, DbscanParams, DEFAULT_MIN_PTS};
use crate::error::{Error, Result};
use crate::geo::{Bounds, GeoPoint};
use crate::ingest::CrimeRecord;
use crate::nsi::{district_nsi, rank_districts, representatives, DistanceMatrix, NsiResult, RepresentativeSet, ThresholdMode};
use crate::polygon::{assign_grade, DistrictLayer, HolcLayer};
use crate::spatial_index::SpatialIndex;
use crate::stats::{chi_square, contingency, group_clusters, percent_breakdown, ChiSquareResult, ContingencyTable};
use crate::tendency::{hopkins_mean, HopkinsConfig, HopkinsSummary, MIN_POINTS as HOPKINS_MIN_POINTS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    pub min_pts: usize,
    /// Fixed eps for every run; `None` selects it per run at the k-distance knee.
    pub eps_override: Option<f64>,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { min_pts: DEFAULT_MIN_PTS, eps_override: None }
    }
}

impl ClusterOptions {
    /// k for the k-distance curve; equal to `min_pts`.
    pub fn k(&self) -> usize {
        self.min_pts
    }

    fn min_points(&self) -> usize {
        match self.eps_override {
            Some(_) => self.min_pts,
            None => self.k() + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsSource {
    Auto,
    Override,
}

impl EpsSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpsSource::Auto => "auto",
            EpsSource::Override => "override",
        }
    }
}

/// Partition key; `None` stands for "all" (citywide or pooled years).
pub type PartitionKey = (Option<u32>, Option<i32>);

pub fn format_key_part<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "all".to_string(), |v| v.to_string())
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub district: Option<u32>,
    pub year: Option<i32>,
    pub eps: f64,
    pub eps_source: EpsSource,
    pub record_ids: Vec<u64>,
    pub points: Vec<GeoPoint>,
    pub labeling: DbscanLabeling,
    pub clusters: Vec<Cluster>,
    pub representatives: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipNotice {
    pub district: Option<u32>,
    pub year: Option<i32>,
    pub n_points: usize,
    pub reason: String,
}

/// Cluster one point set: choose eps (unless overridden) and run DBSCAN.
pub fn cluster_points(points: &[GeoPoint], opts: &ClusterOptions) -> Result<(f64, EpsSource, DbscanLabeling)> {
    if points.len() < opts.min_points() {
        return Err(Error::TooFewPoints { needed: opts.min_points(), got: points.len() });
    }
    let index = SpatialIndex::from_slice(points)?;
    let (eps, source) = match opts.eps_override {
        Some(e) => (e, EpsSource::Override),
        None => (select_epsilon_indexed(&index, opts.k())?, EpsSource::Auto),
    };
    let labeling = dbscan_indexed(&index, DbscanParams::new(eps, opts.min_pts)?)?;
    Ok((eps, source, labeling))
}

/// Group records by (district, year). Records outside `years` are dropped;
/// `by_district = false` pools districts, `by_year = false` pools years.
pub fn partition<'a>(
    records: &'a [CrimeRecord],
    years: &RangeInclusive<i32>,
    by_district: bool,
    by_year: bool,
) -> BTreeMap<PartitionKey, Vec<&'a CrimeRecord>> {
    let mut out: BTreeMap<PartitionKey, Vec<&CrimeRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| years.contains(&r.year())) {
        let key = (by_district.then_some(r.district), by_year.then_some(r.year()));
        out.entry(key).or_default().push(r);
    }
    out
}

fn run_partition(key: PartitionKey, recs: &[&CrimeRecord], opts: &ClusterOptions) -> std::result::Result<ClusterRun, SkipNotice> {
    let points: Vec<GeoPoint> = recs.iter().map(|r| r.location).collect();
    let skip = |reason: String| SkipNotice { district: key.0, year: key.1, n_points: points.len(), reason };
    let (eps, eps_source, labeling) = cluster_points(&points, opts).map_err(|e| skip(e.to_string()))?;
    let cs = clusters(&labeling);
    let reps = representatives(&cs, &points).map_err(|e| skip(e.to_string()))?;
    Ok(ClusterRun {
        district: key.0,
        year: key.1,
        eps,
        eps_source,
        record_ids: recs.iter().map(|r| r.id).collect(),
        points,
        labeling,
        clusters: cs,
        representatives: reps,
    })
}

/// Cluster every (district, year) partition, or every year citywide.
pub fn run_clustering(
    records: &[CrimeRecord],
    years: &RangeInclusive<i32>,
    opts: &ClusterOptions,
    citywide: bool,
) -> (Vec<ClusterRun>, Vec<SkipNotice>) {
    let parts: Vec<(PartitionKey, Vec<&CrimeRecord>)> = partition(records, years, !citywide, true).into_iter().collect();
    let results: Vec<_> = parts.par_iter().map(|(k, recs)| run_partition(*k, recs, opts)).collect();
    let mut runs = Vec::new();
    let mut skips = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(s) => {
                log::info!(
                    "skipping district {} year {} ({} points): {}",
                    format_key_part(s.district),
                    format_key_part(s.year),
                    s.n_points,
                    s.reason
                );
                skips.push(s);
            }
        }
    }
    (runs, skips)
}

#[derive(Debug, Clone, Serialize)]
pub struct UnrankedDistrict {
    pub district: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NsiReport {
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub year_start: i32,
    pub year_end: i32,
    /// Ascending by NSI.
    pub ranked: Vec<NsiResult>,
    pub unranked: Vec<UnrankedDistrict>,
    #[serde(skip)]
    pub matrices: BTreeMap<u32, DistanceMatrix>,
}

/// Yearly representative sets per district, every year of the range
/// present (empty when the year was skipped or had no clusters).
pub fn yearly_representatives(
    runs: &[ClusterRun],
    districts: &BTreeSet<u32>,
    years: &RangeInclusive<i32>,
) -> BTreeMap<u32, Vec<RepresentativeSet>> {
    let by_key: BTreeMap<(u32, i32), &ClusterRun> = runs.iter().filter_map(|r| Some(((r.district?, r.year?), r))).collect();
    districts
        .iter()
        .map(|&d| {
            let sets = years
                .clone()
                .map(|y| RepresentativeSet { year: y, reps: by_key.get(&(d, y)).map(|r| r.representatives.clone()).unwrap_or_default() })
                .collect();
            (d, sets)
        })
        .collect()
}

/// Per-district NSI over `years`, ranked ascending.
pub fn compute_nsi(
    records: &[CrimeRecord],
    years: &RangeInclusive<i32>,
    opts: &ClusterOptions,
    threshold_mode: ThresholdMode,
) -> Result<NsiReport> {
    let (runs, _) = run_clustering(records, years, opts, false);
    let districts: BTreeSet<u32> = records.iter().filter(|r| years.contains(&r.year())).map(|r| r.district).collect();
    let sets = yearly_representatives(&runs, &districts, years);

    // Threshold may depend on every value, so classify after the fact.
    let mut computed = Vec::new();
    let mut unranked = Vec::new();
    for (d, s) in &sets {
        match district_nsi(*d, s, f64::INFINITY) {
            Ok(pair) => computed.push(pair),
            Err(e) => {
                log::warn!("district {d}: no NSI ({e})");
                unranked.push(UnrankedDistrict { district: *d, reason: e.to_string() });
            }
        }
    }
    let values: Vec<f64> = computed.iter().map(|(r, _)| r.value).collect();
    let threshold = threshold_mode.resolve(&values)?;
    let mut matrices = BTreeMap::new();
    let mut results = Vec::new();
    for (mut r, m) in computed {
        r.threshold = threshold;
        r.classification = crate::nsi::classify(r.value, threshold);
        matrices.insert(r.district, m);
        results.push(r);
    }
    Ok(NsiReport {
        threshold,
        threshold_mode,
        year_start: *years.start(),
        year_end: *years.end(),
        ranked: rank_districts(results),
        unranked,
        matrices,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistrictHopkins {
    pub district: u32,
    pub n_points: usize,
    pub summary: HopkinsSummary,
}

/// Hopkins summary per district over all records in `years`. Each district
/// gets its own seed, offset from `cfg.seed` by the district id.
pub fn district_hopkins(records: &[CrimeRecord], years: &RangeInclusive<i32>, cfg: &HopkinsConfig) -> Vec<DistrictHopkins> {
    let parts: Vec<_> = partition(records, years, true, false).into_iter().collect();
    parts
        .par_iter()
        .filter_map(|((d, _), recs)| {
            let d = d.expect("partitioned by district");
            let points: Vec<GeoPoint> = recs.iter().map(|r| r.location).collect();
            if points.len() < HOPKINS_MIN_POINTS {
                log::info!("skipping Hopkins for district {d}: {} points", points.len());
                return None;
            }
            let cfg = HopkinsConfig { seed: cfg.seed.wrapping_add(d as u64), bounds: None, ..cfg.clone() };
            match hopkins_mean(&points, &cfg) {
                Ok(summary) => Some(DistrictHopkins { district: d, n_points: points.len(), summary }),
                Err(e) => {
                    log::warn!("Hopkins failed for district {d}: {e}");
                    None
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RedlineReport {
    pub district: u32,
    pub year_start: i32,
    pub year_end: i32,
    pub n_points: usize,
    pub eps: f64,
    pub eps_source: EpsSource,
    pub cluster_sizes: Vec<usize>,
    pub noise_points: usize,
    pub table: ContingencyTable,
    /// Column percentages, [grade][group].
    pub percentages: Vec<Vec<f64>>,
    pub chi_square: ChiSquareResult,
}

/// Re-cluster one district on all years pooled, then test HOLC grade
/// against largest-cluster versus other-clusters membership.
pub fn redline(
    records: &[CrimeRecord],
    district: u32,
    years: &RangeInclusive<i32>,
    layer: &HolcLayer,
    opts: &ClusterOptions,
) -> Result<RedlineReport> {
    let points: Vec<GeoPoint> =
        records.iter().filter(|r| r.district == district && years.contains(&r.year())).map(|r| r.location).collect();
    let (eps, eps_source, labeling) = cluster_points(&points, opts)?;
    let groups = group_clusters(&labeling)?;
    let pairs: Vec<_> = points.par_iter().zip(&groups).filter_map(|(p, g)| g.map(|g| (assign_grade(p, layer), g))).collect();
    let table = contingency(pairs)?;
    let chi = chi_square(&table)?;
    // A column can be empty only when there is a single cluster, which
    // chi_square already rejects.
    let percentages = percent_breakdown(&table)?;
    Ok(RedlineReport {
        district,
        year_start: *years.start(),
        year_end: *years.end(),
        n_points: points.len(),
        eps,
        eps_source,
        cluster_sizes: labeling.cluster_sizes(),
        noise_points: labeling.n_noise(),
        table,
        percentages,
        chi_square: chi,
    })
}

impl RedlineReport {
    /// Plain-text grade breakdown in the layout of a two-column table.
    pub fn render_text(&self) -> String {
        let t = &self.table;
        let chi = &self.chi_square;
        let mut s =
            format!("Percentage breakdown of HOLC grade by cluster, district {} ({}-{})\n", self.district, self.year_start, self.year_end);
        s += &format!("chi2 = {:.1}, df = {}, p = {:.3e}\n", chi.statistic, chi.df, chi.p_value);
        s += &format!("{:<10} | {:>14} | {:>14}\n", "HOLC Grade", t.col_labels[0], t.col_labels[1]);
        for (i, label) in t.row_labels.iter().enumerate() {
            let cells: Vec<String> = (0..2).map(|j| format!("{:.1}% ({})", self.percentages[i][j], t.counts[i][j])).collect();
            s += &format!("{:<10} | {:>14} | {:>14}\n", label, cells[0], cells[1]);
        }
        s += &format!(
            "points: {}, clusters: {}, noise: {}, ungraded (excluded): {}, eps: {} ({})\n",
            self.n_points,
            self.cluster_sizes.len(),
            self.noise_points,
            t.ungraded,
            self.eps,
            self.eps_source.as_str()
        );
        if !chi.pruned_rows.is_empty() || !chi.pruned_cols.is_empty() {
            s += &format!("pruned empty rows: [{}], columns: [{}]\n", chi.pruned_rows.join(", "), chi.pruned_cols.join(", "));
        }
        if chi.low_expected_counts {
            s += "warning: some expected counts are below 5\n";
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistrictYearShare {
    pub district: u32,
    pub year: i32,
    pub count: u64,
    pub percent: f64,
}

/// Share of each year's records falling in each district. Every district
/// seen in the range gets a row for every year.
pub fn district_year_percentages(records: &[CrimeRecord], years: &RangeInclusive<i32>) -> Result<Vec<DistrictYearShare>> {
    let mut counts: BTreeMap<(i32, u32), u64> = BTreeMap::new();
    let mut per_year: BTreeMap<i32, u64> = BTreeMap::new();
    let mut districts = BTreeSet::new();
    for r in records.iter().filter(|r| years.contains(&r.year())) {
        *counts.entry((r.year(), r.district)).or_default() += 1;
        *per_year.entry(r.year()).or_default() += 1;
        districts.insert(r.district);
    }
    let mut out = Vec::new();
    for y in years.clone() {
        let total = *per_year.get(&y).ok_or(Error::EmptyYear(y))?;
        for &d in &districts {
            let count = counts.get(&(y, d)).copied().unwrap_or(0);
            out.push(DistrictYearShare { district: d, year: y, count, percent: 100.0 * count as f64 / total as f64 });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCounts {
    pub bounds: Bounds,
    pub size: usize,
    /// counts[row][col]; row 0 is the southernmost band.
    pub counts: Vec<Vec<u64>>,
}

impl GridCounts {
    pub fn cell_bounds(&self, row: usize, col: usize) -> Bounds {
        let dlat = self.bounds.lat_span() / self.size as f64;
        let dlon = self.bounds.lon_span() / self.size as f64;
        Bounds {
            min_lat: self.bounds.min_lat + row as f64 * dlat,
            max_lat: self.bounds.min_lat + (row + 1) as f64 * dlat,
            min_lon: self.bounds.min_lon + col as f64 * dlon,
            max_lon: self.bounds.min_lon + (col + 1) as f64 * dlon,
        }
    }
}

/// Bin points into a `size x size` grid over their bounding box. Points on
/// the north/east edge fall in the last band.
pub fn grid_counts(points: &[GeoPoint], size: usize) -> Result<GridCounts> {
    if size == 0 {
        return Err(Error::InvalidParameter("grid size must be at least 1".into()));
    }
    let bounds = Bounds::of_points(points).ok_or(Error::EmptyInput("grid needs points"))?;
    let bin = |v: f64, lo: f64, span: f64| -> usize {
        if span <= 0.0 {
            0
        } else {
            (((v - lo) / span * size as f64) as usize).min(size - 1)
        }
    };
    let mut counts = vec![vec![0u64; size]; size];
    for p in points {
        counts[bin(p.lat, bounds.min_lat, bounds.lat_span())][bin(p.lon, bounds.min_lon, bounds.lon_span())] += 1;
    }
    Ok(GridCounts { bounds, size, counts })
}

/// Replace each record's district with the one whose polygon contains it.
/// Records outside every polygon keep their source district.
pub fn retag_districts(records: &mut [CrimeRecord], layer: &DistrictLayer) {
    records.par_iter_mut().for_each(|r| {
        if let Some(d) = layer.lookup(&r.location) {
            r.district = d;
        }
    });
}
