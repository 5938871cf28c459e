//! Plane geometry over (lat, lon) degree coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in decimal degrees.
///
/// All distances in this crate are plane Euclidean distances with latitude
/// and longitude taken directly as the two coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    /// Checked constructor enforcing lat in [-90, 90] and lon in [-180, 180].
    pub fn checked(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidParameter(format!("coordinate ({lat}, {lon}) outside lat [-90, 90] / lon [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }

    #[inline]
    pub fn distance_sq(&self, other: &GeoPoint) -> f64 {
        let dlat = self.lat - other.lat;
        let dlon = self.lon - other.lon;
        dlat * dlat + dlon * dlon
    }

    #[inline]
    pub fn distance(&self, other: &GeoPoint) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn translate(&self, dlat: f64, dlon: f64) -> GeoPoint {
        GeoPoint::new(self.lat + dlat, self.lon + dlon)
    }

    pub fn scale(&self, a: f64) -> GeoPoint {
        GeoPoint::new(self.lat * a, self.lon * a)
    }
}

/// Axis-aligned rectangle in degree coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl Bounds {
    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Result<Self> {
        let b = Bounds { min_lat, max_lat, min_lon, max_lon };
        if !(min_lat <= max_lat && min_lon <= max_lon) || [min_lat, max_lat, min_lon, max_lon].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid bounds {b:?}")));
        }
        Ok(b)
    }

    /// Bounding box of a point set. `None` when the set is empty.
    pub fn of_points(points: &[GeoPoint]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Bounds { min_lat: first.lat, max_lat: first.lat, min_lon: first.lon, max_lon: first.lon };
        for p in &points[1..] {
            b.min_lat = b.min_lat.min(p.lat);
            b.max_lat = b.max_lat.max(p.lat);
            b.min_lon = b.min_lon.min(p.lon);
            b.max_lon = b.max_lon.max(p.lon);
        }
        Some(b)
    }

    pub fn unit() -> Self {
        Bounds { min_lat: 0.0, max_lat: 1.0, min_lon: 0.0, max_lon: 1.0 }
    }

    pub fn lat_span(&self) -> f64 {
        self.max_lat - self.min_lat
    }

    pub fn lon_span(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    /// True when both spans are strictly positive.
    pub fn has_area(&self) -> bool {
        self.lat_span() > 0.0 && self.lon_span() > 0.0
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }

    /// Map unit-square coordinates (u, v) into the rectangle.
    #[inline]
    pub fn lerp(&self, u: f64, v: f64) -> GeoPoint {
        GeoPoint::new(self.min_lat + u * self.lat_span(), self.min_lon + v * self.lon_span())
    }

    pub fn translate(&self, dlat: f64, dlon: f64) -> Bounds {
        Bounds { min_lat: self.min_lat + dlat, max_lat: self.max_lat + dlat, min_lon: self.min_lon + dlon, max_lon: self.max_lon + dlon }
    }

    pub fn scale(&self, a: f64) -> Bounds {
        Bounds { min_lat: self.min_lat * a, max_lat: self.max_lat * a, min_lon: self.min_lon * a, max_lon: self.max_lon * a }
    }
}

/// Coordinate-wise arithmetic mean. `None` on an empty iterator.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<GeoPoint> {
    let (mut slat, mut slon, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        slat += p.lat;
        slon += p.lon;
        n += 1;
    }
    (n > 0).then(|| GeoPoint::new(slat / n as f64, slon / n as f64))
}
