//! Static 2D k-d tree over a point collection.
//!
//! Queries are exact: every candidate is checked with the same
//! `GeoPoint::distance_sq` a brute-force scan would use, and subtrees are
//! pruned only by a box lower bound that floating-point rounding cannot push
//! above the true computed distance.

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy)]
struct BBox {
    min_lat: f64,
    max_lat: f64,
    min_lon: f64,
    max_lon: f64,
}

impl BBox {
    fn dist_sq(&self, p: &GeoPoint) -> f64 {
        let dlat = if p.lat < self.min_lat {
            self.min_lat - p.lat
        } else if p.lat > self.max_lat {
            p.lat - self.max_lat
        } else {
            0.0
        };
        let dlon = if p.lon < self.min_lon {
            self.min_lon - p.lon
        } else if p.lon > self.max_lon {
            p.lon - self.max_lon
        } else {
            0.0
        };
        dlat * dlat + dlon * dlon
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: BBox,
    start: usize,
    end: usize,
    // Child node indices; `None` for leaves.
    children: Option<(usize, usize)>,
}

/// Immutable index over a point list. Original point indices are preserved in
/// every query result.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<GeoPoint>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(points: Vec<GeoPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("spatial index needs at least one point"));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(&points, &mut order, 0, points.len(), &mut nodes);
        Ok(SpatialIndex { points, order, nodes })
    }

    pub fn from_slice(points: &[GeoPoint]) -> Result<Self> {
        Self::build(points.to_vec())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Result<&GeoPoint> {
        self.points.get(index).ok_or(Error::IndexOutOfRange { index, len: self.points.len() })
    }

    /// Indices of all points within `eps` (closed ball) of point
    /// `center_index`, including the center itself, in ascending order.
    pub fn radius_query(&self, center_index: usize, eps: f64) -> Result<Vec<usize>> {
        let center = *self.point(center_index)?;
        self.radius_query_point(&center, eps)
    }

    /// Like [`radius_query`](Self::radius_query) around an arbitrary location.
    pub fn radius_query_point(&self, center: &GeoPoint, eps: f64) -> Result<Vec<usize>> {
        check_eps(eps)?;
        let mut out = Vec::new();
        self.visit_within(center, eps * eps, |i| out.push(i));
        out.sort_unstable();
        Ok(out)
    }

    /// Number of points within `eps` of point `center_index`, self included.
    pub fn radius_count(&self, center_index: usize, eps: f64) -> Result<usize> {
        let center = *self.point(center_index)?;
        check_eps(eps)?;
        let mut n = 0;
        self.visit_within(&center, eps * eps, |_| n += 1);
        Ok(n)
    }

    pub(crate) fn visit_within(&self, center: &GeoPoint, eps_sq: f64, mut f: impl FnMut(usize)) {
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox.dist_sq(center) > eps_sq {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        if self.points[i].distance_sq(center) <= eps_sq {
                            f(i);
                        }
                    }
                }
            }
        }
    }

    /// Distance from point `point_index` to its k-th nearest other point.
    /// Only the point's own index is excluded; duplicates count as neighbors
    /// at distance 0.
    pub fn kth_nn_distance(&self, point_index: usize, k: usize) -> Result<f64> {
        let n = self.points.len();
        if point_index >= n {
            return Err(Error::IndexOutOfRange { index: point_index, len: n });
        }
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, len: n });
        }
        let q = self.points[point_index];
        let best = self.k_nearest_sq(&q, k, Some(point_index));
        Ok(best[k - 1].sqrt())
    }

    /// Distance from an arbitrary location to the nearest indexed point.
    pub fn nearest_distance(&self, query: &GeoPoint) -> f64 {
        self.k_nearest_sq(query, 1, None)[0].sqrt()
    }

    /// Squared distance to the nearest indexed point, skipping `exclude`.
    /// Needs at least two points when `exclude` is set.
    pub(crate) fn nearest_sq(&self, query: &GeoPoint, exclude: Option<usize>) -> f64 {
        self.k_nearest_sq(query, 1, exclude)[0]
    }

    /// Ascending squared distances of the `k` nearest points, optionally
    /// skipping one index. Caller guarantees enough points exist.
    fn k_nearest_sq(&self, q: &GeoPoint, k: usize, exclude: Option<usize>) -> Vec<f64> {
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((ni, box_d)) = stack.pop() {
            if best.len() == k && box_d > best[k - 1] {
                continue;
            }
            let node = &self.nodes[ni];
            match node.children {
                Some((l, r)) => {
                    let dl = self.nodes[l].bbox.dist_sq(q);
                    let dr = self.nodes[r].bbox.dist_sq(q);
                    // Push the farther child first so the nearer one is popped next.
                    if dl <= dr {
                        stack.push((r, dr));
                        stack.push((l, dl));
                    } else {
                        stack.push((l, dl));
                        stack.push((r, dr));
                    }
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        if Some(i) == exclude {
                            continue;
                        }
                        let d = self.points[i].distance_sq(q);
                        if best.len() < k || d < best[k - 1] {
                            let pos = best.partition_point(|&b| b <= d);
                            best.insert(pos, d);
                            best.truncate(k);
                        }
                    }
                }
            }
        }
        best
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

fn build_node(points: &[GeoPoint], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &order[start..end];
    let mut bbox = BBox { min_lat: f64::INFINITY, max_lat: f64::NEG_INFINITY, min_lon: f64::INFINITY, max_lon: f64::NEG_INFINITY };
    for &i in slice {
        let p = &points[i];
        bbox.min_lat = bbox.min_lat.min(p.lat);
        bbox.max_lat = bbox.max_lat.max(p.lat);
        bbox.min_lon = bbox.min_lon.min(p.lon);
        bbox.max_lon = bbox.max_lon.max(p.lon);
    }
    let id = nodes.len();
    nodes.push(Node { bbox, start, end, children: None });
    if end - start <= LEAF_SIZE {
        return id;
    }

    let split_lat = bbox.max_lat - bbox.min_lat >= bbox.max_lon - bbox.min_lon;
    let mid = (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid, |&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        if split_lat {
            pa.lat.total_cmp(&pb.lat)
        } else {
            pa.lon.total_cmp(&pb.lon)
        }
    });
    let left = build_node(points, order, start, start + mid, nodes);
    let right = build_node(points, order, start + mid, end, nodes);
    nodes[id].children = Some((left, right));
    id
}
