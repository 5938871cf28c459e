//! Polygon layers loaded from GeoJSON and the point-in-polygon join.
//!
//! Rings are stored closed (first vertex repeated at the end). Points on any
//! ring edge, including hole edges, count as inside. Lookups scan entries in
//! file order and return the first match.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geo::{Bounds, GeoPoint};

/// Home Owners' Loan Corporation neighborhood grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HolcGrade {
    A,
    B,
    C,
    D,
}

impl HolcGrade {
    pub const ALL: [HolcGrade; 4] = [HolcGrade::A, HolcGrade::B, HolcGrade::C, HolcGrade::D];

    pub fn as_str(&self) -> &'static str {
        match self {
            HolcGrade::A => "A",
            HolcGrade::B => "B",
            HolcGrade::C => "C",
            HolcGrade::D => "D",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn parse(s: &str) -> Option<HolcGrade> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(HolcGrade::A),
            "B" => Some(HolcGrade::B),
            "C" => Some(HolcGrade::C),
            "D" => Some(HolcGrade::D),
            _ => None,
        }
    }
}

impl fmt::Display for HolcGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Vec<GeoPoint>,
    holes: Vec<Vec<GeoPoint>>,
    bounds: Bounds,
}

impl Polygon {
    pub fn new(outer: Vec<GeoPoint>, holes: Vec<Vec<GeoPoint>>) -> Result<Self> {
        let outer = close_ring(outer)?;
        let holes = holes.into_iter().map(close_ring).collect::<Result<Vec<_>>>()?;
        let bounds = Bounds::of_points(&outer).expect("ring is non-empty");
        Ok(Polygon { outer, holes, bounds })
    }

    pub fn outer(&self) -> &[GeoPoint] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<GeoPoint>] {
        &self.holes
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        point_in_polygon(p, self)
    }
}

fn close_ring(mut ring: Vec<GeoPoint>) -> Result<Vec<GeoPoint>> {
    if ring.iter().any(|p| !p.lat.is_finite() || !p.lon.is_finite()) {
        return Err(Error::InvalidRing("non-finite vertex".into()));
    }
    let mut distinct: Vec<GeoPoint> = Vec::new();
    for p in &ring {
        if !distinct.contains(p) {
            distinct.push(*p);
            if distinct.len() >= 3 {
                break;
            }
        }
    }
    if distinct.len() < 3 {
        return Err(Error::InvalidRing(format!("ring has fewer than 3 distinct vertices ({} given)", ring.len())));
    }
    if ring.first() != ring.last() {
        ring.push(ring[0]);
    }
    Ok(ring)
}

/// Even-odd ray casting; boundary points are inside; points strictly inside
/// a hole are outside.
pub fn point_in_polygon(p: &GeoPoint, poly: &Polygon) -> bool {
    if !poly.bounds.contains(p) {
        return false;
    }
    if on_ring_boundary(p, &poly.outer) || poly.holes.iter().any(|h| on_ring_boundary(p, h)) {
        return true;
    }
    ray_crossings_odd(p, &poly.outer) && !poly.holes.iter().any(|h| ray_crossings_odd(p, h))
}

// Ray cast toward +lon. Vertices sitting exactly on the ray are handled by
// the half-open `>` comparison on lat.
fn ray_crossings_odd(p: &GeoPoint, ring: &[GeoPoint]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_ring_boundary(p: &GeoPoint, ring: &[GeoPoint]) -> bool {
    ring.windows(2).any(|w| on_segment(p, &w[0], &w[1]))
}

fn on_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    cross == 0.0 && p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

/// Tag types a layer can carry, parsed from a feature property.
pub trait LayerTag: Copy + fmt::Debug {
    fn from_property(value: &Value, feature: usize) -> Result<Self>;
}

impl LayerTag for HolcGrade {
    fn from_property(value: &Value, feature: usize) -> Result<Self> {
        let text = match value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        HolcGrade::parse(&text).ok_or(Error::InvalidGrade { feature, value: text })
    }
}

/// District identifiers, given as a number or a numeric string.
impl LayerTag for u32 {
    fn from_property(value: &Value, feature: usize) -> Result<Self> {
        let parsed = match value {
            Value::Number(n) => n.as_u64().and_then(|v| u32::try_from(v).ok()),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        };
        parsed.ok_or_else(|| Error::GeoJson(format!("feature {feature}: `{value}` is not a district id")))
    }
}

/// Tagged polygons in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonLayer<T> {
    pub entries: Vec<(Polygon, T)>,
}

pub type HolcLayer = PolygonLayer<HolcGrade>;
pub type DistrictLayer = PolygonLayer<u32>;

impl<T: LayerTag> PolygonLayer<T> {
    /// Tag of the first polygon (in file order) containing `p`.
    pub fn lookup(&self, p: &GeoPoint) -> Option<T> {
        self.entries.iter().find(|(poly, _)| poly.contains(p)).map(|(_, t)| *t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Grade of the first containing HOLC polygon; `None` means ungraded.
pub fn assign_grade(p: &GeoPoint, layer: &HolcLayer) -> Option<HolcGrade> {
    layer.lookup(p)
}

pub fn load_polygon_layer<T: LayerTag>(path: impl AsRef<Path>, tag_property: &str) -> Result<PolygonLayer<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polygon_layer(&text, tag_property)
}

/// Parse a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
/// MultiPolygons become one entry per part, all with the feature's tag.
pub fn parse_polygon_layer<T: LayerTag>(text: &str, tag_property: &str) -> Result<PolygonLayer<T>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::GeoJson(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::GeoJson("top-level object is not a FeatureCollection".into()));
    }
    let features =
        doc.get("features").and_then(Value::as_array).ok_or_else(|| Error::GeoJson("FeatureCollection has no `features` array".into()))?;

    let mut entries = Vec::new();
    for (i, feature) in features.iter().enumerate() {
        let tag_value = feature
            .get("properties")
            .and_then(|p| p.get(tag_property))
            .filter(|v| !v.is_null())
            .ok_or_else(|| Error::MissingProperty { feature: i, property: tag_property.to_string() })?;
        let tag = T::from_property(tag_value, i)?;
        let geometry =
            feature.get("geometry").filter(|g| !g.is_null()).ok_or_else(|| Error::GeoJson(format!("feature {i} has no geometry")))?;
        let coords = geometry.get("coordinates").ok_or_else(|| Error::GeoJson(format!("feature {i} geometry has no coordinates")))?;
        match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => entries.push((parse_polygon(coords, i)?, tag)),
            Some("MultiPolygon") => {
                let parts =
                    coords.as_array().ok_or_else(|| Error::GeoJson(format!("feature {i}: MultiPolygon coordinates are not an array")))?;
                for part in parts {
                    entries.push((parse_polygon(part, i)?, tag));
                }
            }
            other => {
                return Err(Error::GeoJson(format!("feature {i}: unsupported geometry type {other:?}")));
            }
        }
    }
    Ok(PolygonLayer { entries })
}

fn parse_polygon(coords: &Value, feature: usize) -> Result<Polygon> {
    let rings = coords.as_array().ok_or_else(|| Error::GeoJson(format!("feature {feature}: polygon coordinates are not an array")))?;
    let mut rings = rings.iter().map(|r| parse_ring(r, feature));
    let outer = rings.next().ok_or_else(|| Error::GeoJson(format!("feature {feature}: polygon has no rings")))??;
    let holes = rings.collect::<Result<Vec<_>>>()?;
    Polygon::new(outer, holes)
}

// GeoJSON positions are [lon, lat].
fn parse_ring(ring: &Value, feature: usize) -> Result<Vec<GeoPoint>> {
    let bad = || Error::GeoJson(format!("feature {feature}: malformed ring"));
    ring.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|pos| {
            let pos = pos.as_array().ok_or_else(bad)?;
            match (pos.first().and_then(Value::as_f64), pos.get(1).and_then(Value::as_f64)) {
                (Some(lon), Some(lat)) => Ok(GeoPoint::new(lat, lon)),
                _ => Err(bad()),
            }
        })
        .collect()
}

/// Serialize a ring as GeoJSON positions.
pub(crate) fn ring_to_json(ring: &[GeoPoint]) -> Value {
    Value::Array(ring.iter().map(|p| serde_json::json!([p.lon, p.lat])).collect())
}

impl<T: LayerTag + Serialize> PolygonLayer<T> {
    /// GeoJSON FeatureCollection with the tag stored under `tag_property`.
    pub fn to_geojson(&self, tag_property: &str) -> Value {
        let features: Vec<Value> = self
            .entries
            .iter()
            .map(|(poly, tag)| {
                let mut rings = vec![ring_to_json(&poly.outer)];
                rings.extend(poly.holes.iter().map(|h| ring_to_json(h)));
                serde_json::json!({
                    "type": "Feature",
                    "properties": { tag_property: tag },
                    "geometry": { "type": "Polygon", "coordinates": rings },
                })
            })
            .collect();
        serde_json::json!({ "type": "FeatureCollection", "features": features })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon)
    }

    fn square(lo: f64, hi: f64) -> Vec<GeoPoint> {
        vec![p(lo, lo), p(lo, hi), p(hi, hi), p(hi, lo)]
    }

    #[test]
    fn unit_square() {
        let sq = Polygon::new(square(0.0, 1.0), vec![]).unwrap();
        assert!(point_in_polygon(&p(0.5, 0.5), &sq));
        assert!(!point_in_polygon(&p(2.0, 2.0), &sq));
        assert!(point_in_polygon(&p(0.0, 0.5), &sq));
        assert!(point_in_polygon(&p(1.0, 1.0), &sq));
    }

    #[test]
    fn hole_excludes_center() {
        let poly = Polygon::new(square(0.0, 3.0), vec![square(1.0, 2.0)]).unwrap();
        assert!(!point_in_polygon(&p(1.5, 1.5), &poly));
        assert!(point_in_polygon(&p(0.5, 0.5), &poly));
        assert!(point_in_polygon(&p(1.0, 1.5), &poly));
    }

    #[test]
    fn ring_validation() {
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)], vec![]).is_err());
        let closed = Polygon::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0), p(0.0, 0.0)], vec![]).unwrap();
        assert_eq!(closed.outer().len(), 4);
        let open = Polygon::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)], vec![]).unwrap();
        assert_eq!(open.outer(), closed.outer());
    }

    const ONE_D: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"grade":"D"},
         "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;

    #[test]
    fn load_single_polygon() {
        let layer: HolcLayer = parse_polygon_layer(ONE_D, "grade").unwrap();
        assert_eq!(layer.len(), 1);
        assert_eq!(layer.entries[0].1, HolcGrade::D);
        assert_eq!(assign_grade(&p(0.5, 0.5), &layer), Some(HolcGrade::D));
        assert_eq!(assign_grade(&p(5.0, 0.5), &layer), None);
    }

    #[test]
    fn multipolygon_splits() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"grade":"B"},
             "geometry":{"type":"MultiPolygon","coordinates":[
                [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
                [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}]}"#;
        let layer: HolcLayer = parse_polygon_layer(text, "grade").unwrap();
        assert_eq!(layer.len(), 2);
        assert!(layer.entries.iter().all(|(_, g)| *g == HolcGrade::B));
    }

    #[test]
    fn bad_grade_and_missing_property() {
        let e = ONE_D.replace("\"D\"", "\"E\"");
        assert!(matches!(parse_polygon_layer::<HolcGrade>(&e, "grade"), Err(Error::InvalidGrade { feature: 0, .. })));
        assert!(matches!(parse_polygon_layer::<HolcGrade>(ONE_D, "holc_grade"), Err(Error::MissingProperty { .. })));
        assert!(matches!(parse_polygon_layer::<HolcGrade>("{not json", "grade"), Err(Error::GeoJson(_))));
        assert!(matches!(parse_polygon_layer::<HolcGrade>(r#"{"type":"Feature"}"#, "grade"), Err(Error::GeoJson(_))));
    }

    #[test]
    fn overlap_first_in_file_order_wins() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"grade":"B"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[2,2],[0,2],[0,0]]]}},
            {"type":"Feature","properties":{"grade":"C"},
             "geometry":{"type":"Polygon","coordinates":[[[1,1],[3,1],[3,3],[1,3],[1,1]]]}}]}"#;
        let layer: HolcLayer = parse_polygon_layer(text, "grade").unwrap();
        assert_eq!(assign_grade(&p(1.5, 1.5), &layer), Some(HolcGrade::B));
        assert_eq!(assign_grade(&p(2.5, 2.5), &layer), Some(HolcGrade::C));
    }

    #[test]
    fn district_tags_accept_numbers_and_strings() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"dist":19},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"type":"Feature","properties":{"dist":"25"},
             "geometry":{"type":"Polygon","coordinates":[[[5,5],[6,5],[6,6],[5,5]]]}}]}"#;
        let layer: DistrictLayer = parse_polygon_layer(text, "dist").unwrap();
        assert_eq!(layer.entries.iter().map(|e| e.1).collect::<Vec<_>>(), vec![19, 25]);
    }

    #[test]
    fn geojson_round_trip() {
        let layer: HolcLayer = parse_polygon_layer(ONE_D, "grade").unwrap();
        let text = layer.to_geojson("grade").to_string();
        let back: HolcLayer = parse_polygon_layer(&text, "grade").unwrap();
        assert_eq!(back, layer);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn winding_number(q: &GeoPoint, ring: &[GeoPoint]) -> i32 {
            let is_left = |a: &GeoPoint, b: &GeoPoint| (b.lon - a.lon) * (q.lat - a.lat) - (q.lon - a.lon) * (b.lat - a.lat);
            let mut wn = 0;
            for w in ring.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                if a.lat <= q.lat {
                    if b.lat > q.lat && is_left(a, b) > 0.0 {
                        wn += 1;
                    }
                } else if b.lat <= q.lat && is_left(a, b) < 0.0 {
                    wn -= 1;
                }
            }
            wn
        }

        // Star-shaped (hence simple) polygon around the origin.
        fn star_polygon(rng: &mut ChaCha8Rng) -> Vec<GeoPoint> {
            let n = rng.random_range(3..20);
            let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            angles.dedup();
            angles
                .iter()
                .map(|a| {
                    let r = rng.random_range(0.2..1.0);
                    GeoPoint::new(r * a.sin(), r * a.cos())
                })
                .collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(20))]

            #[test]
            fn agrees_with_winding_number(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let poly = Polygon::new(star_polygon(&mut rng), vec![]).unwrap();
                for _ in 0..1000 {
                    let q = GeoPoint::new(rng.random_range(-1.1..1.1), rng.random_range(-1.1..1.1));
                    if on_ring_boundary(&q, poly.outer()) {
                        continue;
                    }
                    prop_assert_eq!(point_in_polygon(&q, &poly), winding_number(&q, poly.outer()) != 0);
                }
            }
        }
    }
}
