//! Closed-form expected coverage proportions, evaluated by quadrature.
//!
//! Two chord laws are supported. Under [`ChordLaw::Ude`] both endpoints are
//! uniform on the environment circle; fixing one endpoint at angle 0 leaves
//!
//! ```text
//! E[P_UDE] = 1/(2π) ∫_{π−2 asin ρ}^{π+2 asin ρ} √((r_c² − r_e² γ(b)) / (r_e² − r_e² γ(b))) db,
//! γ(b) = (1 + cos b) / 2.
//! ```
//!
//! Under [`ChordLaw::Udm`] the midpoint is uniform over the environment disk,
//! so its distance `l` from the center has density `2l / r_e²` and
//!
//! ```text
//! E[P_UDM] = ∫_0^{r_c} (2l / r_e²) √((r_c² − l²) / (r_e² − l²)) dl.
//! ```
//!
//! Both integrands have vertical tangents at the ends of their ranges. The
//! substitutions `sin((b − π)/2) = ρ sin φ` and `l = r_c sin θ` turn them
//! into smooth integrands on fixed intervals before integration.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CoverageGeometry, GeometryError};
use crate::quadrature::{integrate, QuadratureConfig, QuadratureError};

/// How random straight-line trajectories (chords) are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChordLaw {
    /// Uniformly distributed endpoints on the environment circle.
    #[serde(rename = "UDE", alias = "ude")]
    Ude,
    /// Uniformly distributed midpoints over the environment disk.
    #[serde(rename = "UDM", alias = "udm")]
    Udm,
}

impl ChordLaw {
    pub const ALL: [ChordLaw; 2] = [ChordLaw::Ude, ChordLaw::Udm];

    pub fn as_str(self) -> &'static str {
        match self {
            ChordLaw::Ude => "UDE",
            ChordLaw::Udm => "UDM",
        }
    }
}

impl std::fmt::Display for ChordLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ChordLaw {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "UDE" => Ok(ChordLaw::Ude),
            "UDM" => Ok(ChordLaw::Udm),
            other => Err(format!("unknown chord law `{other}` (expected UDE or UDM)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("ratio rho must lie in [0, 1], got {0}")]
    RhoOutOfRange(f64),
    #[error("no sign change of the expectation difference on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub value: f64,
    pub estimated_quadrature_error: f64,
    pub case: ChordLaw,
}

/// Expected coverage proportion under uniformly distributed endpoints.
pub fn expected_coverage_ude(
    geom: &CoverageGeometry,
    quad: &QuadratureConfig,
) -> Result<ExpectationResult, AnalyticError> {
    let r_c = geom.coverage_radius();
    let r_e = geom.environment_radius();
    let rho = geom.rho();
    if rho >= 1.0 {
        return Ok(exact(ChordLaw::Ude, 1.0));
    }
    // b = π + t with sin(t/2) = ρ sin φ; integrate φ over [0, π/2] and double
    // by symmetry of the integrand in t.
    let integrand = |phi: f64| {
        let s = rho * phi.sin();
        let t = 2.0 * s.asin();
        let b = PI + t;
        let gamma = 0.5 * (1.0 + b.cos());
        let num = (r_c * r_c - r_e * r_e * gamma).max(0.0);
        let den = r_e * r_e - r_e * r_e * gamma;
        let db_dphi = 2.0 * rho * phi.cos() / (1.0 - s * s).sqrt();
        (num / den).sqrt() * db_dphi
    };
    let r = integrate(integrand, 0.0, FRAC_PI_2, quad)?;
    Ok(ExpectationResult {
        value: (2.0 * r.value / (2.0 * PI)).clamp(0.0, 1.0),
        estimated_quadrature_error: r.error / PI,
        case: ChordLaw::Ude,
    })
}

/// Expected coverage proportion under uniformly distributed midpoints.
pub fn expected_coverage_udm(
    geom: &CoverageGeometry,
    quad: &QuadratureConfig,
) -> Result<ExpectationResult, AnalyticError> {
    let r_c = geom.coverage_radius();
    let r_e = geom.environment_radius();
    if geom.rho() >= 1.0 {
        return Ok(exact(ChordLaw::Udm, 1.0));
    }
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let l = r_c * s;
        let num = (r_c * r_c - l * l).max(0.0);
        let den = r_e * r_e - l * l;
        2.0 * l / (r_e * r_e) * (num / den).sqrt() * r_c * c
    };
    let r = integrate(integrand, 0.0, FRAC_PI_2, quad)?;
    Ok(ExpectationResult {
        value: r.value.clamp(0.0, 1.0),
        estimated_quadrature_error: r.error,
        case: ChordLaw::Udm,
    })
}

pub fn expected_coverage(
    case: ChordLaw,
    geom: &CoverageGeometry,
    quad: &QuadratureConfig,
) -> Result<ExpectationResult, AnalyticError> {
    match case {
        ChordLaw::Ude => expected_coverage_ude(geom, quad),
        ChordLaw::Udm => expected_coverage_udm(geom, quad),
    }
}

/// Expected coverage at `r_c = rho`, `r_e = 1`. `rho = 0` means no coverage
/// disk at all and yields exactly zero.
pub fn expected_coverage_at_rho(
    case: ChordLaw,
    rho: f64,
    quad: &QuadratureConfig,
) -> Result<ExpectationResult, AnalyticError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(AnalyticError::RhoOutOfRange(rho));
    }
    if rho == 0.0 {
        return Ok(exact(case, 0.0));
    }
    expected_coverage(case, &CoverageGeometry::centered(rho, 1.0)?, quad)
}

/// `E[P_UDE] − E[P_UDM]` at ratio `rho`.
pub fn expectation_difference(rho: f64, quad: &QuadratureConfig) -> Result<f64, AnalyticError> {
    let ude = expected_coverage_at_rho(ChordLaw::Ude, rho, quad)?;
    let udm = expected_coverage_at_rho(ChordLaw::Udm, rho, quad)?;
    Ok(ude.value - udm.value)
}

/// Width below which crossover bisection stops.
pub const CROSSOVER_TOLERANCE: f64 = 1e-4;

/// Locates the sign change of [`expectation_difference`] inside `[lo, hi]`
/// by bisection until the bracket is narrower than [`CROSSOVER_TOLERANCE`].
pub fn find_difference_crossover(
    lo: f64,
    hi: f64,
    quad: &QuadratureConfig,
) -> Result<f64, AnalyticError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = expectation_difference(lo, quad)?;
    let f_hi = expectation_difference(hi, quad)?;
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        return Err(AnalyticError::NoSignChange { lo, hi });
    }
    while hi - lo >= CROSSOVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = expectation_difference(mid, quad)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of a ρ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifferenceSample {
    pub rho: f64,
    pub ude: f64,
    pub udm: f64,
    pub delta: f64,
}

/// Evaluates both expectations and their difference on `rhos`.
pub fn difference_curve(
    rhos: &[f64],
    quad: &QuadratureConfig,
) -> Result<Vec<DifferenceSample>, AnalyticError> {
    rhos.iter()
        .map(|&rho| {
            let ude = expected_coverage_at_rho(ChordLaw::Ude, rho, quad)?.value;
            let udm = expected_coverage_at_rho(ChordLaw::Udm, rho, quad)?.value;
            Ok(DifferenceSample { rho, ude, udm, delta: ude - udm })
        })
        .collect()
}

/// Interior grid points where `|delta|` is a strict local maximum.
pub fn local_extrema_of_abs_difference(curve: &[DifferenceSample]) -> Vec<f64> {
    curve
        .windows(3)
        .filter(|w| {
            let (a, b, c) = (w[0].delta.abs(), w[1].delta.abs(), w[2].delta.abs());
            b > a && b > c
        })
        .map(|w| w[1].rho)
        .collect()
}

/// Rho values `[start, start + step, ...]` up to and including `end`.
pub fn rho_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return Vec::new();
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| (start + i as f64 * step).min(end)).collect()
}

fn exact(case: ChordLaw, value: f64) -> ExpectationResult {
    ExpectationResult { value, estimated_quadrature_error: 0.0, case }
}

/// Cumulative distribution of the midpoint distance under uniformly
/// distributed midpoints: `(ℓ*)² / r_e²` on `[0, r_e]`.
pub fn midpoint_distance_cdf(ell_star: f64, r_e: f64) -> f64 {
    if ell_star <= 0.0 {
        0.0
    } else if ell_star >= r_e {
        1.0
    } else {
        (ell_star * ell_star) / (r_e * r_e)
    }
}

/// Density matching [`midpoint_distance_cdf`]: `2ℓ*/r_e²` on `[0, r_e]`.
pub fn midpoint_distance_pdf(ell_star: f64, r_e: f64) -> f64 {
    if (0.0..=r_e).contains(&ell_star) {
        2.0 * ell_star / (r_e * r_e)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn geom(r_c: f64, r_e: f64) -> CoverageGeometry {
        CoverageGeometry::centered(r_c, r_e).unwrap()
    }

    // Brute-force midpoint rule in the original variables; it converges
    // slowly near the vertical tangents but is fully independent of the
    // substitutions used in the implementation.
    fn ude_midpoint_rule(rho: f64, n: usize) -> f64 {
        let half = 2.0 * rho.asin();
        let (a, b) = (PI - half, PI + half);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            let g = 0.5 * (1.0 + x.cos());
            acc += ((rho * rho - g).max(0.0) / (1.0 - g)).sqrt();
        }
        acc * h / (2.0 * PI)
    }

    fn udm_midpoint_rule(rho: f64, n: usize) -> f64 {
        let h = rho / n as f64;
        (0..n)
            .map(|i| {
                let l = (i as f64 + 0.5) * h;
                2.0 * l * ((rho * rho - l * l) / (1.0 - l * l)).sqrt()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn reported_values_at_half() {
        let ude = expected_coverage_ude(&geom(0.5, 1.0), &quad()).unwrap();
        let udm = expected_coverage_udm(&geom(0.5, 1.0), &quad()).unwrap();
        assert!((ude.value - 0.134).abs() <= 0.001, "{}", ude.value);
        assert!((udm.value - 0.088).abs() <= 0.001, "{}", udm.value);
        assert_eq!(ude.case, ChordLaw::Ude);
        assert!(ude.estimated_quadrature_error >= 0.0);
    }

    #[test]
    fn agrees_with_brute_force_in_original_variables() {
        for rho in [0.1, 0.25, 0.5, 0.8, 0.95] {
            let g = geom(rho, 1.0);
            let ude = expected_coverage_ude(&g, &quad()).unwrap().value;
            let udm = expected_coverage_udm(&g, &quad()).unwrap().value;
            assert!((ude - ude_midpoint_rule(rho, 2_000_000)).abs() < 2e-6, "ude rho={rho}");
            assert!((udm - udm_midpoint_rule(rho, 2_000_000)).abs() < 2e-6, "udm rho={rho}");
        }
    }

    #[test]
    fn full_coverage_is_one() {
        for case in ChordLaw::ALL {
            let r = expected_coverage(case, &geom(2.0, 2.0), &quad()).unwrap();
            assert_eq!(r.value, 1.0);
        }
    }

    #[test]
    fn near_full_coverage_approaches_one() {
        for case in ChordLaw::ALL {
            let r = expected_coverage(case, &geom(1.0 - 1e-9, 1.0), &quad()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-3, "{case}: {}", r.value);
        }
    }

    #[test]
    fn depends_only_on_rho() {
        for case in ChordLaw::ALL {
            let base = expected_coverage(case, &geom(0.3, 1.0), &quad()).unwrap().value;
            for scale in [0.1, 2.5, 1000.0] {
                let v = expected_coverage(case, &geom(0.3 * scale, scale), &quad()).unwrap().value;
                assert!((v - base).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn monotone_in_coverage_radius() {
        for case in ChordLaw::ALL {
            let mut prev = 0.0;
            for i in 1..=50 {
                let v = expected_coverage_at_rho(case, i as f64 / 50.0, &quad()).unwrap().value;
                assert!(v >= prev - 1e-12, "{case} at {i}");
                prev = v;
            }
        }
    }

    #[test]
    fn difference_endpoints_and_midpoint() {
        assert_eq!(expectation_difference(0.0, &quad()).unwrap(), 0.0);
        assert_eq!(expectation_difference(1.0, &quad()).unwrap(), 0.0);
        let d = expectation_difference(0.5, &quad()).unwrap();
        assert!((d - 0.046).abs() <= 0.002);
        assert!(expectation_difference(1.5, &quad()).is_err());
    }

    #[test]
    fn crossover_between_three_quarters_and_point_eight_three() {
        let x = find_difference_crossover(0.75, 0.83, &quad()).unwrap();
        assert!((0.75..=0.83).contains(&x));
        let lo = expectation_difference(x - CROSSOVER_TOLERANCE, &quad()).unwrap();
        let hi = expectation_difference(x + CROSSOVER_TOLERANCE, &quad()).unwrap();
        assert!(lo > 0.0 && hi < 0.0);
        assert!(find_difference_crossover(0.1, 0.5, &quad()).is_err());
    }

    #[test]
    fn cdf_and_pdf() {
        assert_eq!(midpoint_distance_cdf(2.0, 2.0), 1.0);
        assert_eq!(midpoint_distance_cdf(1.0, 2.0), 0.25);
        assert_eq!(midpoint_distance_cdf(0.0, 2.0), 0.0);
        assert_eq!(midpoint_distance_cdf(-1.0, 2.0), 0.0);
        assert_eq!(midpoint_distance_cdf(3.0, 2.0), 1.0);
        assert_eq!(midpoint_distance_pdf(2.0, 2.0), 1.0);
        assert_eq!(midpoint_distance_pdf(2.5, 2.0), 0.0);
        let total = integrate(|l| midpoint_distance_pdf(l, 2.0), 0.0, 2.0, &quad()).unwrap();
        assert!((total.value - 1.0).abs() < 1e-12);
        let h = 1e-5;
        for l in [0.1, 0.7, 1.3, 1.9] {
            let fd = (midpoint_distance_cdf(l + h, 2.0) - midpoint_distance_cdf(l - h, 2.0)) / (2.0 * h);
            assert!((fd - midpoint_distance_pdf(l, 2.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn grid_includes_both_ends() {
        let g = rho_grid(0.0, 1.0, 0.01);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert!(rho_grid(0.0, 1.0, 0.0).is_empty());
    }

    #[test]
    fn law_parsing() {
        assert_eq!("ude".parse::<ChordLaw>().unwrap(), ChordLaw::Ude);
        assert_eq!("UDM".parse::<ChordLaw>().unwrap(), ChordLaw::Udm);
        assert!("x".parse::<ChordLaw>().is_err());
    }
}
