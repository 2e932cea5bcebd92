//! Hybrid estimate of trajectory coverage: pack the region with circular
//! environments, split each trajectory by environment, and weight each
//! piece by the closed-form expected coverage of its environment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{expected_coverage, AnalyticError, ChordLaw};
use crate::geo::RegionOfInterest;
use crate::geometry::{polyline_length, segment_disk_interval, segment_union_length, CoverageGeometry, Disk, Point2};
use crate::polygon::{boundary_distance, contains, BoundingBox};
use crate::quadrature::QuadratureConfig;

/// Lattice offsets tried per axis, as fractions of the lattice period.
const PHASE_STEPS: usize = 8;
/// Relative slack when testing that a circle lies inside the region.
const FIT_TOLERANCE: f64 = 1e-9;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("environment radius {r_e} must be positive and at least the coverage radius {r_c}")]
    BadRadii { r_e: f64, r_c: f64 },
    #[error("region needs at least three vertices")]
    EmptyRegion,
    #[error("trajectory has no length")]
    EmptyTrajectory,
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPacking {
    pub centers: Vec<Point2>,
    pub r_e: f64,
    pub r_c: f64,
    pub warnings: Vec<String>,
}

impl EnvironmentPacking {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn disks(&self) -> Vec<Disk> {
        self.centers.iter().map(|c| Disk { center: *c, radius: self.r_e }).collect()
    }

    pub fn geometry(&self) -> Result<CoverageGeometry, HybridError> {
        CoverageGeometry::centered(self.r_c, self.r_e).map_err(|_| HybridError::BadRadii { r_e: self.r_e, r_c: self.r_c })
    }
}

fn fits(region: &[Point2], c: Point2, r: f64) -> bool {
    contains(region, c) && boundary_distance(region, c) >= r * (1.0 - FIT_TOLERANCE)
}

fn lattice(region: &[Point2], bb: &BoundingBox, r: f64, origin: Point2) -> Vec<Point2> {
    let dx = 2.0 * r;
    let dy = 3f64.sqrt() * r;
    // First row and column at or below the box so every lattice point of
    // the box is visited.
    let j0 = ((bb.min.y - origin.y) / dy).floor() as i64 - 1;
    let j1 = ((bb.max.y - origin.y) / dy).ceil() as i64 + 1;
    let i0 = ((bb.min.x - origin.x) / dx).floor() as i64 - 1;
    let i1 = ((bb.max.x - origin.x) / dx).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { r } else { 0.0 };
        let y = origin.y + j as f64 * dy;
        if y < bb.min.y + r * (1.0 - FIT_TOLERANCE) || y > bb.max.y - r * (1.0 - FIT_TOLERANCE) {
            continue;
        }
        for i in i0..=i1 {
            let c = Point2::new(origin.x + i as f64 * dx + shift, y);
            if fits(region, c, r) {
                out.push(c);
            }
        }
    }
    out
}

/// Packs `region` with circles of radius `r_e` on a triangular lattice of
/// pitch `2 r_e`. Several lattice offsets are tried (through the box center,
/// tangent to the box's low edges, and fractional shifts) and the one
/// holding the most circles wins. An empty packing carries a warning.
pub fn pack_region(region: &[Point2], r_e: f64, r_c: f64) -> Result<EnvironmentPacking, HybridError> {
    if !(r_e.is_finite() && r_c.is_finite() && r_c > 0.0 && r_e >= r_c) {
        return Err(HybridError::BadRadii { r_e, r_c });
    }
    let bb = BoundingBox::of(region).filter(|_| region.len() >= 3).ok_or(HybridError::EmptyRegion)?;
    let center = Point2::new(0.5 * (bb.min.x + bb.max.x), 0.5 * (bb.min.y + bb.max.y));
    // Per axis: through the box center, tangent to the low edge, and a
    // spread of fractional shifts of the lattice period.
    let phases = |mid: f64, low: f64, period: f64| {
        let mut v = vec![mid, low + r_e];
        v.extend((0..PHASE_STEPS).map(|f| low + f as f64 / PHASE_STEPS as f64 * period));
        v
    };
    let xs = phases(center.x, bb.min.x, 2.0 * r_e);
    let ys = phases(center.y, bb.min.y, 2.0 * 3f64.sqrt() * r_e);
    let origins = ys.iter().flat_map(|y| xs.iter().map(move |x| Point2::new(*x, *y)));
    let mut best: Vec<Point2> = Vec::new();
    for o in origins {
        let c = lattice(region, &bb, r_e, o);
        if c.len() > best.len() {
            best = c;
        }
    }
    let warnings = if best.is_empty() {
        vec![format!("no circle of radius {r_e} fits inside the region")]
    } else {
        Vec::new()
    };
    Ok(EnvironmentPacking { centers: best, r_e, r_c, warnings })
}

/// Packs the ROI boundary polygon.
pub fn pack_roi(roi: &RegionOfInterest, r_e: f64, r_c: f64) -> Result<EnvironmentPacking, HybridError> {
    pack_region(&roi.boundary, r_e, r_c)
}

/// A trajectory split into per-environment pieces and a residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDecomposition {
    /// `(environment index, sub-polyline)` in travel order.
    pub pieces: Vec<(usize, Vec<Point2>)>,
    /// Length lying in no environment.
    pub residual_length: f64,
    pub total_length: f64,
}

impl TrajectoryDecomposition {
    pub fn piece_length(&self) -> f64 {
        self.pieces.iter().map(|(_, p)| polyline_length(p)).sum()
    }

    pub fn residual_fraction(&self) -> f64 {
        (self.residual_length / self.total_length).clamp(0.0, 1.0)
    }
}

/// Splits `waypoints` by the packing's environments. A piece continues
/// across a waypoint while the path stays inside the same environment. The
/// residual is measured separately from the pieces, so the two can be
/// checked against the total.
pub fn decompose_trajectory(
    waypoints: &[Point2],
    packing: &EnvironmentPacking,
) -> Result<TrajectoryDecomposition, HybridError> {
    let total_length = polyline_length(waypoints);
    if waypoints.len() < 2 || total_length <= 0.0 {
        return Err(HybridError::EmptyTrajectory);
    }
    let disks = packing.disks();
    let mut pieces: Vec<(usize, Vec<Point2>)> = Vec::new();
    let mut residual_length = 0.0;
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg_bb = BoundingBox::of(&[a, b]).expect("two points");
        let near: Vec<(usize, Disk)> = disks
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, d)| {
                d.center.x + d.radius >= seg_bb.min.x
                    && d.center.x - d.radius <= seg_bb.max.x
                    && d.center.y + d.radius >= seg_bb.min.y
                    && d.center.y - d.radius <= seg_bb.max.y
            })
            .collect();
        let mut hits: Vec<(f64, f64, usize)> = near
            .iter()
            .filter_map(|(i, d)| segment_disk_interval(a, b, d).map(|(t0, t1)| (t0, t1, *i)))
            .collect();
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (t0, t1, i) in hits {
            let (p, q) = (a.lerp(b, t0), a.lerp(b, t1));
            match pieces.last_mut() {
                Some((last, poly)) if *last == i && t0 == 0.0 && poly.last() == Some(&a) => poly.push(q),
                _ => pieces.push((i, vec![p, q])),
            }
        }
        let d: Vec<Disk> = near.into_iter().map(|(_, d)| d).collect();
        residual_length += a.distance(b) - segment_union_length(a, b, &d);
    }
    Ok(TrajectoryDecomposition { pieces, residual_length: residual_length.max(0.0), total_length })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridEstimate {
    pub estimate: f64,
    /// Fraction of the trajectory in no environment.
    pub epsilon: f64,
}

/// `sum_i |tau_i| E[P] / L`, with the residual contributing nothing and
/// reported as `epsilon`.
pub fn hybrid_expected_coverage(
    decomp: &TrajectoryDecomposition,
    packing: &EnvironmentPacking,
    case: ChordLaw,
    quad: &QuadratureConfig,
) -> Result<HybridEstimate, HybridError> {
    let inside = decomp.piece_length();
    let estimate = if inside > 0.0 {
        let e = expected_coverage(case, &packing.geometry()?, quad)?.value;
        (inside * e / decomp.total_length).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(HybridEstimate { estimate, epsilon: decomp.residual_fraction() })
}

/// Summary over a set of trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub r_e: f64,
    pub r_c: f64,
    pub case: ChordLaw,
    /// Mean of per-trajectory estimates.
    pub estimate: f64,
    /// Mean of per-trajectory residual fractions.
    pub epsilon: f64,
    /// Counts of per-trajectory residual fractions in ten equal bins over
    /// `[0, 1]`; a fraction of exactly 1 falls in the last bin.
    pub residual_fraction_histogram: Vec<usize>,
    pub trajectories: usize,
}

pub fn hybrid_report<'a, I>(
    trajectories: I,
    packing: &EnvironmentPacking,
    case: ChordLaw,
    quad: &QuadratureConfig,
) -> Result<HybridReport, HybridError>
where
    I: IntoIterator<Item = &'a [Point2]>,
{
    let mut hist = vec![0usize; HISTOGRAM_BINS];
    let (mut est, mut eps, mut n) = (0.0, 0.0, 0usize);
    for t in trajectories {
        let d = decompose_trajectory(t, packing)?;
        let h = hybrid_expected_coverage(&d, packing, case, quad)?;
        est += h.estimate;
        eps += h.epsilon;
        n += 1;
        hist[((h.epsilon * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    let n_f = n.max(1) as f64;
    Ok(HybridReport {
        k: packing.len(),
        r_e: packing.r_e,
        r_c: packing.r_c,
        case,
        estimate: est / n_f,
        epsilon: if n == 0 { 1.0 } else { eps / n_f },
        residual_fraction_histogram: hist,
        trajectories: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rect(w: f64, h: f64) -> Vec<Point2> {
        vec![Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)]
    }

    /// Regular polygon whose inscribed circle has radius `r`.
    fn circumscribing(r: f64, n: usize) -> Vec<Point2> {
        let big = r / (PI / n as f64).cos();
        (0..n).map(|k| Point2::from_polar(big, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    fn assert_valid(p: &EnvironmentPacking, region: &[Point2]) {
        for (i, a) in p.centers.iter().enumerate() {
            assert!(fits(region, *a, p.r_e));
            for b in &p.centers[i + 1..] {
                assert!(a.distance(*b) >= 2.0 * p.r_e * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn inscribed_disk_gives_one_environment() {
        let region = circumscribing(100.0, 64);
        let p = pack_region(&region, 100.0, 50.0).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.centers[0].norm() < 1e-6);
    }

    #[test]
    fn two_fit_in_a_four_by_two_rectangle() {
        let region = rect(4.0, 2.0);
        let p = pack_region(&region, 1.0, 0.5).unwrap();
        assert!(p.len() >= 2);
        assert_valid(&p, &region);
    }

    #[test]
    fn density_approaches_hexagonal_bound() {
        let hex = PI / (2.0 * 3f64.sqrt());
        let density = |side: f64| {
            let p = pack_region(&rect(side, side), 1.0, 1.0).unwrap();
            assert_valid(&p, &rect(side, side));
            p.len() as f64 * PI / (side * side)
        };
        let d40 = density(40.0);
        let d160 = density(160.0);
        assert!(d40 > 0.80 && d40 < hex, "{d40}");
        assert!(d160 > d40 && hex - d160 < 0.03, "{d160}");
    }

    #[test]
    fn too_small_region_warns() {
        let p = pack_region(&rect(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.warnings.len(), 1);
        assert!(pack_region(&rect(1.0, 1.0), 1.0, 2.0).is_err());
    }

    fn single(r_e: f64, r_c: f64) -> EnvironmentPacking {
        EnvironmentPacking { centers: vec![Point2::ORIGIN], r_e, r_c, warnings: vec![] }
    }

    #[test]
    fn chord_of_one_environment() {
        let p = single(1.0, 0.5);
        let chord = [Point2::from_polar(1.0, 0.3), Point2::from_polar(1.0, 2.5)];
        let d = decompose_trajectory(&chord, &p).unwrap();
        assert_eq!(d.pieces.len(), 1);
        assert!(d.residual_length.abs() < 1e-12);
        let quad = QuadratureConfig::default();
        let h = hybrid_expected_coverage(&d, &p, ChordLaw::Udm, &quad).unwrap();
        let e = expected_coverage(ChordLaw::Udm, &p.geometry().unwrap(), &quad).unwrap().value;
        assert!((h.estimate - e).abs() < 1e-12);
        assert!((h.estimate - 0.088).abs() < 5e-4);
        assert_eq!(h.epsilon, 0.0);
    }

    #[test]
    fn path_outside_everything_is_residual() {
        let p = single(1.0, 0.5);
        let path = [Point2::new(5.0, 5.0), Point2::new(8.0, 9.0), Point2::new(12.0, 9.0)];
        let d = decompose_trajectory(&path, &p).unwrap();
        assert!(d.pieces.is_empty());
        assert!((d.residual_length - 9.0).abs() < 1e-12);
        let h = hybrid_expected_coverage(&d, &p, ChordLaw::Ude, &QuadratureConfig::default()).unwrap();
        assert_eq!((h.estimate, h.epsilon), (0.0, 1.0));
    }

    #[test]
    fn pieces_join_across_waypoints_and_conserve_length() {
        let p = EnvironmentPacking {
            centers: vec![Point2::ORIGIN, Point2::new(2.0, 0.0)],
            r_e: 1.0,
            r_c: 0.5,
            warnings: vec![],
        };
        let path = [Point2::new(-2.0, 0.1), Point2::new(0.0, 0.2), Point2::new(4.0, -0.1)];
        let d = decompose_trajectory(&path, &p).unwrap();
        assert_eq!(d.pieces.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(d.pieces[0].1.len(), 3);
        let sum = d.piece_length() + d.residual_length;
        assert!((sum - d.total_length).abs() <= 1e-9 * d.total_length);
    }

    #[test]
    fn report_histogram() {
        let p = single(1.0, 0.5);
        let inside = [Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)];
        let outside = [Point2::new(3.0, 0.0), Point2::new(4.0, 0.0)];
        let r = hybrid_report([&inside[..], &outside[..]], &p, ChordLaw::Ude, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.residual_fraction_histogram[0], 1);
        assert_eq!(r.residual_fraction_histogram[9], 1);
        assert!((r.epsilon - 0.5).abs() < 1e-12);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["K", "r_e", "r_c", "case", "estimate", "epsilon", "residual_fraction_histogram"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
