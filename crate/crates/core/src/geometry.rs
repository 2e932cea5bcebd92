//! Planar geometry of chords, coverage disks and segment–disk intersections.
//!
//! Everything here is double precision and pure. Degenerate configurations
//! (tangency, zero-length chords, rim chords) resolve to zero coverage so
//! that they can never abort a long sampling run.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Abutting parameter intervals closer than this are merged.
pub const INTERVAL_MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("coverage radius {r_c} exceeds environment radius {r_e}")]
    CoverageExceedsEnvironment { r_c: f64, r_e: f64 },
    #[error("trajectory needs at least two points")]
    TooFewPoints,
    #[error("trajectory has zero length")]
    ZeroLength,
}

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Checked constructor rejecting NaN and infinities.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeometryError::NonFinite(x, y))
        }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point2) -> f64 {
        (self - other).norm_squared()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Linear interpolation, `t = 0` gives `self`.
    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// A closed disk, used for receiver coverage areas and packed environments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite(center.x, center.y));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance_squared(p) <= self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Receiver coverage disk of radius `r_c` inside a concentric circular
/// environment of radius `r_e`, with `0 < r_c <= r_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageGeometry {
    center: Point2,
    r_c: f64,
    r_e: f64,
}

impl CoverageGeometry {
    pub fn new(center: Point2, r_c: f64, r_e: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite(center.x, center.y));
        }
        for r in [r_c, r_e] {
            if !(r.is_finite() && r > 0.0) {
                return Err(GeometryError::BadRadius(r));
            }
        }
        if r_c > r_e {
            return Err(GeometryError::CoverageExceedsEnvironment { r_c, r_e });
        }
        Ok(Self { center, r_c, r_e })
    }

    /// Geometry centered at the origin.
    pub fn centered(r_c: f64, r_e: f64) -> Result<Self, GeometryError> {
        Self::new(Point2::ORIGIN, r_c, r_e)
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn coverage_radius(&self) -> f64 {
        self.r_c
    }

    pub fn environment_radius(&self) -> f64 {
        self.r_e
    }

    /// `r_c / r_e`, in `(0, 1]`.
    pub fn rho(&self) -> f64 {
        self.r_c / self.r_e
    }

    pub fn coverage_disk(&self) -> Disk {
        Disk { center: self.center, radius: self.r_c }
    }

    /// Point on the environment circle at `angle`.
    pub fn rim_point(&self, angle: f64) -> Point2 {
        self.center + Point2::from_polar(self.r_e, angle)
    }
}

/// A straight trajectory between two points of the environment circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub alpha: f64,
    pub beta: f64,
    pub endpoint_a: Point2,
    pub endpoint_b: Point2,
    pub midpoint: Point2,
    /// Distance from the midpoint to the environment center.
    pub ell: f64,
}

impl Chord {
    /// Both endpoints coincide; the chord is a single point.
    pub fn is_degenerate(&self) -> bool {
        let d = (self.alpha - self.beta).rem_euclid(TAU);
        d == 0.0 || self.endpoint_a == self.endpoint_b
    }

    pub fn length(&self) -> f64 {
        self.endpoint_a.distance(self.endpoint_b)
    }

    /// Proportion of the chord inside the concentric coverage disk; zero
    /// for degenerate chords.
    pub fn coverage(&self, geom: &CoverageGeometry) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            concentric_coverage_proportion(self.ell, geom)
        }
    }
}

/// Builds the chord whose endpoints sit at angles `alpha` and `beta` on the
/// environment circle. Angles are reduced into `[0, 2π)`.
pub fn chord_from_angles(alpha: f64, beta: f64, geom: &CoverageGeometry) -> Chord {
    let alpha = alpha.rem_euclid(TAU);
    let beta = beta.rem_euclid(TAU);
    let endpoint_a = geom.rim_point(alpha);
    let endpoint_b = geom.rim_point(beta);
    // Midpoint relative to the center, straight from the endpoint angles.
    let r_e = geom.environment_radius();
    let rel = Point2::new(
        0.5 * r_e * (alpha.cos() + beta.cos()),
        0.5 * r_e * (alpha.sin() + beta.sin()),
    );
    let ell = rel.norm().min(r_e);
    Chord {
        alpha,
        beta,
        endpoint_a,
        endpoint_b,
        midpoint: geom.center() + rel,
        ell,
    }
}

/// Squared midpoint distance of the chord from angle 0 to angle `beta`:
/// `r_e² (1 + cos β) / 2`.
pub fn ell_squared_ude(beta: f64, r_e: f64) -> f64 {
    r_e * r_e * (1.0 + beta.cos()) / 2.0
}

/// Proportion of a chord with midpoint distance `ell` that lies inside the
/// concentric coverage disk: `√((r_c² − ℓ²)/(r_e² − ℓ²))` when `ℓ < r_c`,
/// otherwise zero. When the coverage disk fills the environment every chord
/// is fully covered.
pub fn concentric_coverage_proportion(ell: f64, geom: &CoverageGeometry) -> f64 {
    let r_c = geom.coverage_radius();
    let r_e = geom.environment_radius();
    if r_c >= r_e {
        return 1.0;
    }
    let ell = ell.abs();
    if ell >= r_c {
        return 0.0;
    }
    let num = (r_c - ell) * (r_c + ell);
    let den = (r_e - ell) * (r_e + ell);
    (num / den).sqrt().clamp(0.0, 1.0)
}

/// Parameter interval `[t_in, t_out] ⊆ [0, 1]` of the segment `a + t (b − a)`
/// lying strictly inside `disk`. `None` for misses, tangency, or a
/// zero-length segment.
pub fn segment_disk_interval(a: Point2, b: Point2, disk: &Disk) -> Option<(f64, f64)> {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return None;
    }
    // Foot of the perpendicular from the center, then half-chord in t units.
    let t_foot = (disk.center - a).dot(d) / len2;
    let foot = a + d * t_foot;
    let gap2 = disk.radius * disk.radius - foot.distance_squared(disk.center);
    if gap2 <= 0.0 {
        return None;
    }
    let half = (gap2 / len2).sqrt();
    let t_in = (t_foot - half).max(0.0);
    let t_out = (t_foot + half).min(1.0);
    (t_out > t_in).then_some((t_in, t_out))
}

/// Length of segment `[a, b]` inside `disk`.
pub fn segment_disk_intersection_length(a: Point2, b: Point2, disk: &Disk) -> f64 {
    match segment_disk_interval(a, b, disk) {
        Some((t0, t1)) => (t1 - t0) * a.distance(b),
        None => 0.0,
    }
}

/// Sorts and merges parameter intervals in place; intervals whose gap is
/// below [`INTERVAL_MERGE_TOLERANCE`] are fused.
pub fn merge_intervals(intervals: &mut Vec<(f64, f64)>) {
    if intervals.len() < 2 {
        return;
    }
    intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out = 0;
    for i in 1..intervals.len() {
        let (lo, hi) = intervals[i];
        if lo <= intervals[out].1 + INTERVAL_MERGE_TOLERANCE {
            intervals[out].1 = intervals[out].1.max(hi);
        } else {
            out += 1;
            intervals[out] = (lo, hi);
        }
    }
    intervals.truncate(out + 1);
}

/// Total polyline length.
pub fn polyline_length(polyline: &[Point2]) -> f64 {
    polyline.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Length of `[a, b]` covered by the union of `disks`.
pub fn segment_union_length<'a, I>(a: Point2, b: Point2, disks: I) -> f64
where
    I: IntoIterator<Item = &'a Disk>,
{
    let mut intervals: Vec<(f64, f64)> = disks
        .into_iter()
        .filter_map(|d| segment_disk_interval(a, b, d))
        .collect();
    merge_intervals(&mut intervals);
    let covered: f64 = intervals.iter().map(|(lo, hi)| hi - lo).sum();
    covered.min(1.0) * a.distance(b)
}

/// Fraction of the polyline's length inside the union of `disks`.
/// Overlapping disks are never double counted.
pub fn polyline_coverage_proportion(
    polyline: &[Point2],
    disks: &[Disk],
) -> Result<f64, GeometryError> {
    if polyline.len() < 2 {
        return Err(GeometryError::TooFewPoints);
    }
    let total = polyline_length(polyline);
    if total <= 0.0 {
        return Err(GeometryError::ZeroLength);
    }
    let covered: f64 = polyline
        .windows(2)
        .map(|w| segment_union_length(w[0], w[1], disks))
        .sum();
    Ok((covered / total).clamp(0.0, 1.0))
}
