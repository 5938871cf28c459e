//! Non-systemic index: how far a district's hotspot representatives move
//! from year to year.
//!
//! Each year's clusters are reduced to representatives (mean of core
//! points), years are compared with a symmetric average-of-minimum-distances
//! set metric, and the index is the Frobenius norm of the resulting
//! year-by-year distance matrix.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::geo::{centroid, GeoPoint};

pub const DEFAULT_THRESHOLD: f64 = 0.06;

/// Cluster representatives for one year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativeSet {
    pub year: i32,
    pub reps: Vec<GeoPoint>,
}

/// Mean of the cluster's core points. Border members are ignored.
pub fn representative(cluster: &Cluster, points: &[GeoPoint]) -> Result<GeoPoint> {
    if let Some(&i) = cluster.core_members.iter().find(|&&i| i >= points.len()) {
        return Err(Error::IndexOutOfRange { index: i, len: points.len() });
    }
    centroid(cluster.core_members.iter().map(|&i| &points[i])).ok_or(Error::EmptyCoreSet(cluster.id))
}

/// Representatives of every cluster, in cluster id order.
pub fn representatives(clusters: &[Cluster], points: &[GeoPoint]) -> Result<Vec<GeoPoint>> {
    clusters.iter().map(|c| representative(c, points)).collect()
}

/// Average over `a` of the distance to the nearest point of `b`, plus the
/// same with the roles swapped.
pub fn set_distance(a: &[GeoPoint], b: &[GeoPoint]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("set distance needs two non-empty sets"));
    }
    Ok(mean_min_distance(a, b) + mean_min_distance(b, a))
}

fn mean_min_distance(from: &[GeoPoint], to: &[GeoPoint]) -> f64 {
    let total: f64 = from.iter().map(|p| to.iter().map(|q| p.distance_sq(q)).fold(f64::INFINITY, f64::min).sqrt()).sum();
    total / from.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub years: Vec<i32>,
    pub entries: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }
}

/// Pairwise set distances between the non-empty years of `sets`. Years with
/// no representatives are left out of the matrix.
pub fn distance_matrix(sets: &[RepresentativeSet]) -> Result<DistanceMatrix> {
    let used: Vec<&RepresentativeSet> = sets.iter().filter(|s| !s.reps.is_empty()).collect();
    if used.len() < 2 {
        return Err(Error::TooFewYears(used.len()));
    }
    let n = used.len();
    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = set_distance(&used[i].reps, &used[j].reps)?;
            entries[i][j] = d;
            entries[j][i] = d;
        }
    }
    Ok(DistanceMatrix { years: used.iter().map(|s| s.year).collect(), entries })
}

/// Frobenius norm of the matrix.
pub fn nsi(matrix: &DistanceMatrix) -> f64 {
    matrix.entries.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Systemic,
    NonSystemic,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Systemic => "systemic",
            Classification::NonSystemic => "non-systemic",
        }
    }
}

/// Systemic iff `value < threshold`.
pub fn classify(value: f64, threshold: f64) -> Classification {
    if value < threshold {
        Classification::Systemic
    } else {
        Classification::NonSystemic
    }
}

/// How the systemic/non-systemic cut-off is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum ThresholdMode {
    Fixed(f64),
    RunMedian,
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Fixed(DEFAULT_THRESHOLD)
    }
}

impl ThresholdMode {
    pub fn resolve(&self, values: &[f64]) -> Result<f64> {
        let t = match *self {
            ThresholdMode::Fixed(t) => t,
            ThresholdMode::RunMedian => median(values).ok_or(Error::EmptyInput("median threshold needs NSI values"))?,
        };
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("NSI threshold must be positive, got {t}")));
        }
        Ok(t)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NsiResult {
    pub district: u32,
    pub value: f64,
    pub years_used: Vec<i32>,
    /// Years in the configured range that had no clusters.
    pub years_skipped: Vec<i32>,
    pub clusters_per_year: BTreeMap<i32, usize>,
    pub classification: Classification,
    pub threshold: f64,
}

/// Ascending by value, ties broken by district id.
pub fn rank_districts(mut results: Vec<NsiResult>) -> Vec<NsiResult> {
    results.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(Ordering::Equal).then(a.district.cmp(&b.district)));
    results
}

/// NSI of one district from its yearly representative sets.
pub fn district_nsi(district: u32, sets: &[RepresentativeSet], threshold: f64) -> Result<(NsiResult, DistanceMatrix)> {
    let matrix = distance_matrix(sets)?;
    let value = nsi(&matrix);
    let result = NsiResult {
        district,
        value,
        years_used: matrix.years.clone(),
        years_skipped: sets.iter().filter(|s| s.reps.is_empty()).map(|s| s.year).collect(),
        clusters_per_year: sets.iter().map(|s| (s.year, s.reps.len())).collect(),
        classification: classify(value, threshold),
        threshold,
    };
    Ok((result, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon)
    }

    fn cluster(core: Vec<usize>, border: Vec<usize>) -> Cluster {
        let mut members = core.clone();
        members.extend(border);
        Cluster { id: 0, members, core_members: core }
    }

    #[test]
    fn representative_is_core_mean() {
        let pts = vec![p(0.0, 0.0), p(2.0, 0.0), p(100.0, 0.0)];
        assert_eq!(representative(&cluster(vec![0, 1], vec![]), &pts).unwrap(), p(1.0, 0.0));
        assert_eq!(representative(&cluster(vec![0, 1], vec![2]), &pts).unwrap(), p(1.0, 0.0));
        assert!(matches!(representative(&cluster(vec![], vec![2]), &pts), Err(Error::EmptyCoreSet(0))));
    }

    #[test]
    fn set_distance_hand_values() {
        let s = vec![p(0.3, 0.1), p(-2.0, 4.0)];
        assert_eq!(set_distance(&s, &s).unwrap(), 0.0);
        assert_eq!(set_distance(&[p(0.0, 0.0)], &[p(3.0, 4.0)]).unwrap(), 10.0);
        let d = set_distance(&[p(0.0, 0.0), p(1.0, 0.0)], &[p(0.0, 1.0)]).unwrap();
        assert!((d - ((1.0 + 2f64.sqrt()) / 2.0 + 1.0)).abs() < 1e-15);
        assert!((d - 2.2071067).abs() < 1e-7);
        assert!(set_distance(&[], &s).is_err());
    }

    #[test]
    fn matrix_and_nsi_hand_values() {
        let sets =
            vec![RepresentativeSet { year: 2012, reps: vec![p(0.0, 0.0)] }, RepresentativeSet { year: 2013, reps: vec![p(1.0, 0.0)] }];
        let m = distance_matrix(&sets).unwrap();
        assert_eq!(m.entries, vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert!((nsi(&m) - 8f64.sqrt()).abs() < 1e-12);

        let same = vec![
            RepresentativeSet { year: 1, reps: vec![p(1.0, 1.0), p(2.0, 2.0)] },
            RepresentativeSet { year: 2, reps: vec![p(2.0, 2.0), p(1.0, 1.0)] },
        ];
        let m = distance_matrix(&same).unwrap();
        assert_eq!(m.entries, vec![vec![0.0; 2]; 2]);
        assert_eq!(nsi(&m), 0.0);
    }

    #[test]
    fn empty_years_are_skipped() {
        let sets = vec![
            RepresentativeSet { year: 2012, reps: vec![p(0.0, 0.0)] },
            RepresentativeSet { year: 2013, reps: vec![] },
            RepresentativeSet { year: 2014, reps: vec![p(1.0, 0.0)] },
        ];
        let (r, m) = district_nsi(5, &sets, 0.06).unwrap();
        assert_eq!(m.years, vec![2012, 2014]);
        assert_eq!(r.years_used, vec![2012, 2014]);
        assert_eq!(r.years_skipped, vec![2013]);
        assert_eq!(r.clusters_per_year[&2013], 0);
        assert_eq!(r.classification, Classification::NonSystemic);

        let one = &sets[..2];
        assert!(matches!(distance_matrix(one), Err(Error::TooFewYears(1))));
    }

    #[test]
    fn classification_boundary() {
        assert_eq!(classify(0.0273, 0.06), Classification::Systemic);
        assert_eq!(classify(0.0332, 0.06), Classification::Systemic);
        assert_eq!(classify(0.06, 0.06), Classification::NonSystemic);
        assert_eq!(classify(0.0, 1e-9), Classification::Systemic);
    }

    #[test]
    fn threshold_modes() {
        assert_eq!(ThresholdMode::default().resolve(&[]).unwrap(), 0.06);
        assert_eq!(ThresholdMode::RunMedian.resolve(&[0.1, 0.3, 0.2]).unwrap(), 0.2);
        assert_eq!(ThresholdMode::RunMedian.resolve(&[0.1, 0.3, 0.2, 0.4]).unwrap(), 0.25);
        assert!(ThresholdMode::RunMedian.resolve(&[]).is_err());
        assert!(ThresholdMode::Fixed(0.0).resolve(&[]).is_err());
    }

    fn result(district: u32, value: f64) -> NsiResult {
        NsiResult {
            district,
            value,
            years_used: vec![],
            years_skipped: vec![],
            clusters_per_year: BTreeMap::new(),
            classification: classify(value, 0.06),
            threshold: 0.06,
        }
    }

    #[test]
    fn ranking() {
        let r = rank_districts(vec![result(7, 0.2), result(25, 0.0273)]);
        assert_eq!(r.iter().map(|r| r.district).collect::<Vec<_>>(), vec![25, 7]);
        let r = rank_districts(vec![result(9, 0.1), result(3, 0.1), result(5, 0.1)]);
        assert_eq!(r.iter().map(|r| r.district).collect::<Vec<_>>(), vec![3, 5, 9]);
    }
}
