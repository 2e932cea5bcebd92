//! Random chord generation and Monte Carlo estimates of expected coverage.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{expected_coverage, AnalyticError, ChordLaw};
use crate::geometry::{chord_from_angles, Chord, CoverageGeometry, GeometryError};
use crate::quadrature::QuadratureConfig;
use crate::rng::RngStream;

/// Trials per aggregation block. Blocks are reduced in index order, so the
/// result is independent of the thread count.
const BLOCK: usize = 4096;

/// Chord with independent, uniformly distributed endpoint angles.
pub fn sample_ude_chord<R: Rng + ?Sized>(rng: &mut R, geom: &CoverageGeometry) -> Chord {
    let alpha = rng.random_range(0.0..TAU);
    let beta = rng.random_range(0.0..TAU);
    chord_from_angles(alpha, beta, geom)
}

/// Chord whose midpoint is uniform over the environment disk.
///
/// The midpoint is drawn at radius `r_e √u` and a uniform bearing θ; the chord
/// is the one perpendicular to the center–midpoint ray, i.e. with endpoints
/// at angles `θ ± acos(ℓ / r_e)`. A midpoint exactly at the center yields the
/// diameter perpendicular to bearing θ.
pub fn sample_udm_chord<R: Rng + ?Sized>(rng: &mut R, geom: &CoverageGeometry) -> Chord {
    let u: f64 = rng.random();
    let theta = rng.random_range(0.0..TAU);
    let r_e = geom.environment_radius();
    let ell = r_e * u.sqrt();
    let half_angle = (ell / r_e).clamp(-1.0, 1.0).acos();
    chord_from_angles(theta + half_angle, theta - half_angle, geom)
}

pub fn sample_chord<R: Rng + ?Sized>(case: ChordLaw, rng: &mut R, geom: &CoverageGeometry) -> Chord {
    match case {
        ChordLaw::Ude => sample_ude_chord(rng, geom),
        ChordLaw::Udm => sample_udm_chord(rng, geom),
    }
}

/// Empirical mean and spread of a sample of coverage proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
    pub n_trials: usize,
}

/// Running mean and sum of squared deviations (Welford / Chan).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }

    /// Sample standard deviation (`n − 1` denominator).
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> McEstimate {
        let std_dev = self.std_dev();
        McEstimate {
            mean: self.mean.clamp(0.0, 1.0),
            std_dev,
            std_error: if self.count == 0 { 0.0 } else { std_dev / (self.count as f64).sqrt() },
            n_trials: self.count,
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum McError {
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error("sweep grids must be non-empty")]
    EmptyGrid,
    #[error("coverage fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Mean and spread of the concentric coverage proportion over `n_trials`
/// chords drawn under `case`. Trial `i` draws from `stream.child(i)`.
pub fn estimate_expected_coverage(
    case: ChordLaw,
    geom: &CoverageGeometry,
    n_trials: usize,
    stream: RngStream,
) -> Result<McEstimate, McError> {
    if n_trials < 2 {
        return Err(McError::TooFewTrials(n_trials));
    }
    let blocks = n_trials.div_ceil(BLOCK);
    let moments: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(n_trials);
            (start..end)
                .map(|i| {
                    let mut rng = stream.child(i as u64).rng();
                    sample_chord(case, &mut rng, geom).coverage(geom)
                })
                .collect()
        })
        .collect();
    let total = moments.into_iter().fold(Moments::default(), Moments::merge);
    Ok(total.estimate())
}

/// One cell of the analytic versus Monte Carlo comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub case: ChordLaw,
    pub r_e: f64,
    pub r_c: f64,
    /// `None` when the quadrature failed for this cell.
    pub analytic: Option<f64>,
    pub analytic_error: Option<String>,
    pub mc: McEstimate,
}

impl SweepRow {
    /// `|analytic − mean| ≤ 4 · standard error`.
    pub fn within_four_std_errors(&self) -> bool {
        self.analytic
            .is_some_and(|a| (a - self.mc.mean).abs() <= 4.0 * self.mc.std_error)
    }
}

/// Default environment radii of the verification grid.
pub const DEFAULT_ENVIRONMENT_RADII: [f64; 5] = [0.1, 1.0, 1.5, 2.0, 2.5];
/// Default coverage radii as fractions of the environment radius.
pub const DEFAULT_COVERAGE_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const DEFAULT_SWEEP_TRIALS: usize = 10_000;

/// Compares closed-form and sampled expectations on every
/// `(case, r_e, fraction · r_e)` cell. Cell `j` samples from stream
/// `(seed, j)` so the table is reproducible cell by cell.
pub fn verification_sweep(
    r_e_grid: &[f64],
    rc_fractions: &[f64],
    n_trials: usize,
    seed: u64,
    quad: &QuadratureConfig,
) -> Result<Vec<SweepRow>, McError> {
    if r_e_grid.is_empty() || rc_fractions.is_empty() {
        return Err(McError::EmptyGrid);
    }
    if let Some(&f) = rc_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(McError::BadFraction(f));
    }
    let mut cells = Vec::new();
    for case in ChordLaw::ALL {
        for &r_e in r_e_grid {
            for &frac in rc_fractions {
                let r_c = if frac == 1.0 { r_e } else { frac * r_e };
                cells.push((case, CoverageGeometry::centered(r_c, r_e)?));
            }
        }
    }
    cells
        .iter()
        .enumerate()
        .map(|(j, (case, geom))| {
            let (analytic, analytic_error) = match expected_coverage(*case, geom, quad) {
                Ok(r) => (Some(r.value), None),
                Err(e @ AnalyticError::Quadrature(_)) => (None, Some(e.to_string())),
                Err(e) => (None, Some(e.to_string())),
            };
            let mc = estimate_expected_coverage(*case, geom, n_trials, RngStream::new(seed, j as u64))?;
            Ok(SweepRow {
                case: *case,
                r_e: geom.environment_radius(),
                r_c: geom.coverage_radius(),
                analytic,
                analytic_error,
                mc,
            })
        })
        .collect()
}

/// Writes the sweep as CSV with header
/// `case,r_e,r_c,analytic,mc_mean,mc_std,mc_stderr,n_trials,within_4se`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "case", "r_e", "r_c", "analytic", "mc_mean", "mc_std", "mc_stderr", "n_trials", "within_4se",
    ])?;
    for row in rows {
        w.write_record([
            row.case.as_str().to_string(),
            row.r_e.to_string(),
            row.r_c.to_string(),
            row.analytic.map(|a| a.to_string()).unwrap_or_default(),
            row.mc.mean.to_string(),
            row.mc.std_dev.to_string(),
            row.mc.std_error.to_string(),
            row.mc.n_trials.to_string(),
            row.within_four_std_errors().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
