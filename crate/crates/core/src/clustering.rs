//! DBSCAN with deterministic core/border/noise labeling and k-distance
//! knee selection of `eps`.
//!
//! Conventions:
//! - neighborhoods are closed balls and include the query point itself, so
//!   `min_pts = 4` means the point plus three others;
//! - clusters are connected components of core points under `eps`-adjacency,
//!   numbered from 0 in ascending order of their lowest-index core point;
//! - a border point joins the cluster of its lowest-index core neighbor.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::spatial_index::SpatialIndex;

pub const DEFAULT_MIN_PTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        let p = DbscanParams { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Core,
    Border,
    Noise,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Core => "core",
            Role::Border => "border",
            Role::Noise => "noise",
        }
    }
}

/// Per-point cluster assignment (`None` = noise) and role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanLabeling {
    assignment: Vec<Option<usize>>,
    roles: Vec<Role>,
    n_clusters: usize,
}

impl DbscanLabeling {
    /// Assemble a labeling from parts, checking the structural invariants.
    pub fn from_parts(assignment: Vec<Option<usize>>, roles: Vec<Role>) -> Result<Self> {
        if assignment.len() != roles.len() {
            return Err(Error::InvalidParameter("assignment and role lengths differ".into()));
        }
        let n_clusters = assignment.iter().flatten().max().map_or(0, |m| m + 1);
        let mut has_core = vec![false; n_clusters];
        for (a, r) in assignment.iter().zip(&roles) {
            match (a, r) {
                (None, Role::Noise) => {}
                (Some(c), Role::Core) => has_core[*c] = true,
                (Some(_), Role::Border) => {}
                _ => return Err(Error::InvalidParameter("role Noise must coincide with no assignment".into())),
            }
        }
        if let Some(c) = has_core.iter().position(|h| !h) {
            return Err(Error::EmptyCoreSet(c));
        }
        Ok(DbscanLabeling { assignment, roles, n_clusters })
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_noise(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Noise).count()
    }

    /// Member count per cluster id.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for c in self.assignment.iter().flatten() {
            sizes[*c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<usize>,
    pub core_members: Vec<usize>,
}

/// Run DBSCAN over `points`. An empty input yields an empty labeling.
pub fn dbscan(points: &[GeoPoint], params: DbscanParams) -> Result<DbscanLabeling> {
    params.validate()?;
    if points.is_empty() {
        return Ok(DbscanLabeling { assignment: vec![], roles: vec![], n_clusters: 0 });
    }
    let index = SpatialIndex::from_slice(points)?;
    dbscan_indexed(&index, params)
}

/// DBSCAN over a prebuilt index.
pub fn dbscan_indexed(index: &SpatialIndex, params: DbscanParams) -> Result<DbscanLabeling> {
    params.validate()?;
    let n = index.len();
    let eps_sq = params.eps * params.eps;
    let points = index.points();

    let is_core: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            index.visit_within(&points[i], eps_sq, |_| count += 1);
            count >= params.min_pts
        })
        .collect();

    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !is_core[seed] || assignment[seed].is_some() {
            continue;
        }
        let id = n_clusters;
        n_clusters += 1;
        assignment[seed] = Some(id);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            index.visit_within(&points[p], eps_sq, |q| {
                if is_core[q] && assignment[q].is_none() {
                    assignment[q] = Some(id);
                    stack.push(q);
                }
            });
        }
    }

    let border: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if is_core[i] {
                return None;
            }
            let mut lowest: Option<usize> = None;
            index.visit_within(&points[i], eps_sq, |q| {
                if is_core[q] && lowest.is_none_or(|l| q < l) {
                    lowest = Some(q);
                }
            });
            lowest.and_then(|q| assignment[q])
        })
        .collect();

    let mut roles = vec![Role::Noise; n];
    for i in 0..n {
        if is_core[i] {
            roles[i] = Role::Core;
        } else if let Some(c) = border[i] {
            roles[i] = Role::Border;
            assignment[i] = Some(c);
        }
    }
    Ok(DbscanLabeling { assignment, roles, n_clusters })
}

/// One [`Cluster`] per cluster id, in id order; noise is excluded.
pub fn clusters(labeling: &DbscanLabeling) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = (0..labeling.n_clusters).map(|id| Cluster { id, members: vec![], core_members: vec![] }).collect();
    for (i, (a, r)) in labeling.assignment.iter().zip(&labeling.roles).enumerate() {
        if let Some(c) = a {
            out[*c].members.push(i);
            if *r == Role::Core {
                out[*c].core_members.push(i);
            }
        }
    }
    out
}

/// Ascending curve of every point's distance to its k-th nearest other point.
pub fn k_distance_curve(index: &SpatialIndex, k: usize) -> Result<Vec<f64>> {
    let n = index.len();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, len: n });
    }
    let mut curve: Vec<f64> = (0..n).into_par_iter().map(|i| index.kth_nn_distance(i, k)).collect::<Result<_>>()?;
    curve.sort_by(f64::total_cmp);
    Ok(curve)
}

/// Index of the point farthest from the chord joining the first and last
/// curve points (x = position, y = value). Ties go to the smallest index.
///
/// The argmax is invariant to independent rescaling of either axis, so no
/// normalization is applied.
pub fn knee_index(curve: &[f64]) -> Option<usize> {
    let m = curve.len();
    if m == 0 {
        return None;
    }
    if m < 3 {
        return Some(0);
    }
    let (y0, y1) = (curve[0], curve[m - 1]);
    let span_x = (m - 1) as f64;
    let rise = y1 - y0;
    // Rounding slack for curves that are linear up to float error.
    let tol = 1e-12 * span_x * rise.abs();
    let mut best = 0;
    let mut best_d = 0.0;
    for (i, &y) in curve.iter().enumerate() {
        let d = (span_x * (y0 - y) + i as f64 * rise).abs();
        if d > best_d + tol {
            best = i;
            best_d = d;
        }
    }
    Some(best)
}

/// Pick `eps` at the knee of the sorted k-distance curve.
///
/// A zero knee (heavily duplicated coordinates) falls back to the smallest
/// positive curve value, since DBSCAN needs `eps > 0`.
pub fn select_epsilon(points: &[GeoPoint], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::KOutOfRange { k, len: points.len() });
    }
    if points.len() < k + 1 {
        return Err(Error::TooFewPoints { needed: k + 1, got: points.len() });
    }
    let index = SpatialIndex::from_slice(points)?;
    select_epsilon_indexed(&index, k)
}

pub fn select_epsilon_indexed(index: &SpatialIndex, k: usize) -> Result<f64> {
    if index.len() < k + 1 {
        return Err(Error::TooFewPoints { needed: k + 1, got: index.len() });
    }
    let curve = k_distance_curve(index, k)?;
    let knee = knee_index(&curve).expect("curve is non-empty");
    let eps = curve[knee];
    if eps > 0.0 {
        return Ok(eps);
    }
    curve
        .iter()
        .copied()
        .find(|d| *d > 0.0)
        .ok_or_else(|| Error::InvalidParameter("all k-distances are zero; eps cannot be selected".into()))
}
