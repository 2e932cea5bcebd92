use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

/// Mean Earth radius used by the local projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Local equirectangular projection about a reference longitude/latitude:
/// `x = R Δλ cos φ_ref`, `y = R Δφ`. Adequate for city-sized extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub ref_lon: f64,
    pub ref_lat: f64,
}

impl LocalProjection {
    pub fn new(ref_lon: f64, ref_lat: f64) -> Self {
        Self { ref_lon, ref_lat }
    }

    /// Longitude/latitude in degrees to local meters.
    pub fn project(&self, lon: f64, lat: f64) -> Point2 {
        let cos_ref = self.ref_lat.to_radians().cos();
        Point2::new(
            EARTH_RADIUS_M * (lon - self.ref_lon).to_radians() * cos_ref,
            EARTH_RADIUS_M * (lat - self.ref_lat).to_radians(),
        )
    }

    /// Inverse of [`LocalProjection::project`], returning `(lon, lat)`.
    pub fn unproject(&self, p: Point2) -> (f64, f64) {
        let cos_ref = self.ref_lat.to_radians().cos();
        let lon = self.ref_lon + (p.x / (EARTH_RADIUS_M * cos_ref)).to_degrees();
        let lat = self.ref_lat + (p.y / EARTH_RADIUS_M).to_degrees();
        (lon, lat)
    }

    /// Projects a point stored as `(x = lon, y = lat)`.
    pub fn project_point(&self, lonlat: Point2) -> Point2 {
        self.project(lonlat.x, lonlat.y)
    }
}

/// Local equirectangular projection of `(lon, lat)` about `reference`.
pub fn project_to_local(lon: f64, lat: f64, reference: (f64, f64)) -> Point2 {
    LocalProjection::new(reference.0, reference.1).project(lon, lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SF: (f64, f64) = (-122.4194, 37.7749);

    #[test]
    fn reference_maps_to_origin() {
        assert_eq!(project_to_local(SF.0, SF.1, SF), Point2::ORIGIN);
    }

    #[test]
    fn one_millidegree_north() {
        let p = project_to_local(SF.0, SF.1 + 0.001, SF);
        let expected = EARTH_RADIUS_M * 0.001f64.to_radians();
        assert!((p.y - expected).abs() < 1e-6);
        assert!((p.y - 111.19).abs() < 0.01);
        assert!(p.x.abs() < 1e-9);
    }

    #[test]
    fn round_trip() {
        let proj = LocalProjection::new(SF.0, SF.1);
        for (dlon, dlat) in [(0.05, -0.03), (-0.1, 0.08), (0.0001, 0.0)] {
            let (lon, lat) = (SF.0 + dlon, SF.1 + dlat);
            let p = proj.project(lon, lat);
            let (lon2, lat2) = proj.unproject(p);
            let back = proj.project(lon2, lat2);
            assert!(back.distance(p) < 1e-9);
        }
    }
}
