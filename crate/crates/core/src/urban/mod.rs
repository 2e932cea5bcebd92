//! City-scale coverage: random receiver deployments, trajectories between
//! vendors and customers, convergence tracking and receiver-count search.

mod disk_index;
pub mod synthetic;

pub use disk_index::DiskIndex;

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{CityData, Feet, IngestError, OccupancyGrid};
use crate::geometry::Point2;
use crate::montecarlo::Moments;
use crate::planning::{plan_rrt_star, plan_slpp, OdPair, PlanError, Planner, RrtStarParams, Trajectory};
use crate::rng::RngStream;

/// Default size of the customer pool drawn from residential land.
pub const DEFAULT_CUSTOMER_POOL: usize = 5000;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 50;
pub const DEFAULT_CONVERGENCE_TOLERANCE: f64 = 0.03;
/// OD pairs tried per trajectory before a scenario gives up.
pub const DEFAULT_MAX_OD_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverTech {
    R250,
    R1000,
    R2000,
}

impl ReceiverTech {
    pub const ALL: [ReceiverTech; 3] = [ReceiverTech::R250, ReceiverTech::R1000, ReceiverTech::R2000];

    /// Reception radius in meters.
    pub fn radius(self) -> f64 {
        match self {
            ReceiverTech::R250 => 250.0,
            ReceiverTech::R1000 => 1000.0,
            ReceiverTech::R2000 => 2000.0,
        }
    }
}

impl std::fmt::Display for ReceiverTech {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for ReceiverTech {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "R250" | "250" => Ok(ReceiverTech::R250),
            "R1000" | "1000" => Ok(ReceiverTech::R1000),
            "R2000" | "2000" => Ok(ReceiverTech::R2000),
            other => Err(format!("unknown receiver technology `{other}` (expected R250, R1000 or R2000)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverDeployment {
    pub centers: Vec<Point2>,
    pub tech: ReceiverTech,
}

impl ReceiverDeployment {
    pub fn index(&self) -> DiskIndex {
        DiskIndex::new(&self.centers, self.tech.radius())
    }
}

#[derive(Debug, Error)]
pub enum UrbanError {
    #[error("requested {requested} receivers but only {available} candidate sites exist")]
    TooManyReceivers { requested: usize, available: usize },
    #[error("the world has no vendors")]
    NoVendors,
    #[error("the world has no customers")]
    NoCustomers,
    #[error("RRT* scenarios need an occupancy grid")]
    MissingGrid,
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("trajectory {trajectory} of trial {trial}: {attempts} OD pairs failed to plan, last error: {last}")]
    PlanningExhausted { trial: usize, trajectory: usize, attempts: usize, last: PlanError },
    #[error("target {target} not reached within {upper} receivers; best was n = {best_n} with mean {best_mean:.4}")]
    Unreachable { target: f64, upper: usize, best_n: usize, best_mean: f64 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Chooses `n` distinct sites uniformly without replacement.
pub fn place_receivers<R: Rng + ?Sized>(
    n: usize,
    sites: &[Point2],
    tech: ReceiverTech,
    rng: &mut R,
) -> Result<ReceiverDeployment, UrbanError> {
    if n > sites.len() {
        return Err(UrbanError::TooManyReceivers { requested: n, available: sites.len() });
    }
    let mut idx = sample_indices(rng, sites.len(), n).into_vec();
    idx.sort_unstable();
    Ok(ReceiverDeployment { centers: idx.into_iter().map(|i| sites[i]).collect(), tech })
}

/// Everything a scenario draws from, in projected meters.
#[derive(Debug, Clone)]
pub struct World {
    pub vendors: Vec<Point2>,
    pub customers: Vec<Point2>,
    pub candidate_sites: Vec<Point2>,
    /// Needed for RRT*; its altitude must match the scenario's.
    pub grid: Option<OccupancyGrid>,
}

impl World {
    /// Draws a customer pool of `n_customers` from the city's residential
    /// land and takes building centroids as candidate sites.
    pub fn from_city(
        city: &CityData,
        n_customers: usize,
        grid: Option<OccupancyGrid>,
        stream: RngStream,
    ) -> Result<Self, UrbanError> {
        let customers = city.sample_customers(n_customers, &mut stream.rng())?;
        Ok(Self {
            vendors: city.vendors.iter().map(|v| v.location).collect(),
            customers: customers.into_iter().map(|c| c.location).collect(),
            candidate_sites: city.candidate_receiver_sites(),
            grid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub altitude_ft: Feet,
    pub tech: ReceiverTech,
    pub planner: Planner,
    pub n_receivers: usize,
    pub trajectories_per_trial: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Draw a fresh deployment every trial; otherwise one for the scenario.
    pub redraw_receivers: bool,
    pub rrt: RrtStarParams,
    pub max_od_attempts: usize,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            altitude_ft: Feet(200.0),
            tech: ReceiverTech::R1000,
            planner: Planner::Slpp,
            n_receivers: 0,
            trajectories_per_trial: 1000,
            n_trials: 20,
            seed: 0,
            redraw_receivers: true,
            rrt: RrtStarParams::default(),
            max_od_attempts: DEFAULT_MAX_OD_ATTEMPTS,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            convergence_tolerance: DEFAULT_CONVERGENCE_TOLERANCE,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), UrbanError> {
        let bad = |m: &str| Err(UrbanError::InvalidConfig(m.to_string()));
        if self.trajectories_per_trial == 0 || self.n_trials == 0 {
            return bad("trial and trajectory counts must be positive");
        }
        if self.max_od_attempts == 0 {
            return bad("max_od_attempts must be positive");
        }
        if !(self.convergence_tolerance >= 0.0) {
            return bad("convergence_tolerance must be non-negative");
        }
        if !(self.altitude_ft.0.is_finite() && self.altitude_ft.0 >= 0.0) {
            return bad("altitude_ft must be non-negative");
        }
        self.rrt.validate().map_err(|e| UrbanError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub per_trial_means: Vec<f64>,
    pub overall_mean: f64,
    /// Standard error of the overall mean across trials (0 for one trial).
    pub std_error: f64,
    /// Running mean over all trajectories, trial by trial.
    pub running_means: Vec<f64>,
    pub converged: bool,
    /// OD pairs that failed to plan and were resampled.
    pub failures: usize,
    pub n_receivers: usize,
    #[serde(skip)]
    pub coverages: Vec<f64>,
}

/// True iff the last `window` values all lie within `tolerance` of the final
/// value. Series no longer than `window` are never converged.
pub fn convergence_check(running_means: &[f64], window: usize, tolerance: f64) -> bool {
    let Some(&last) = running_means.last() else { return false };
    if window >= running_means.len() {
        return false;
    }
    running_means[running_means.len() - window..]
        .iter()
        .all(|v| (v - last).abs() <= tolerance)
}

pub fn running_means(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

struct Planned {
    trajectory: Trajectory,
    failures: usize,
}

fn plan_one(
    cfg: &ScenarioConfig,
    world: &World,
    stream: RngStream,
    trial: usize,
    index: usize,
) -> Result<Planned, UrbanError> {
    let mut rng = stream.rng();
    let mut failures = 0;
    let mut last = None;
    for _ in 0..cfg.max_od_attempts {
        let od = OdPair {
            origin: world.vendors[rng.random_range(0..world.vendors.len())],
            destination: world.customers[rng.random_range(0..world.customers.len())],
        };
        let planned = match cfg.planner {
            Planner::Slpp => plan_slpp(&od),
            Planner::RrtStar => {
                let params = RrtStarParams { rng: RngStream::new(rng.random(), 0), ..cfg.rrt };
                plan_rrt_star(&od, world.grid.as_ref().expect("validated"), &params)
            }
        };
        match planned {
            Ok(trajectory) => return Ok(Planned { trajectory, failures }),
            Err(e) => {
                failures += 1;
                last = Some(e);
            }
        }
    }
    Err(UrbanError::PlanningExhausted {
        trial,
        trajectory: index,
        attempts: cfg.max_od_attempts,
        last: last.expect("at least one attempt"),
    })
}

/// Trajectories of one trial, planned from `trial_stream.child(j)`.
pub fn trial_trajectories(
    cfg: &ScenarioConfig,
    world: &World,
    trial: usize,
) -> Result<(Vec<Trajectory>, usize), UrbanError> {
    check_world(cfg, world)?;
    let stream = trial_stream(cfg.seed, trial);
    let planned: Vec<Planned> = (0..cfg.trajectories_per_trial)
        .into_par_iter()
        .map(|j| plan_one(cfg, world, stream.child(j as u64), trial, j))
        .collect::<Result<_, _>>()?;
    let failures = planned.iter().map(|p| p.failures).sum();
    Ok((planned.into_iter().map(|p| p.trajectory).collect(), failures))
}

fn trial_stream(seed: u64, trial: usize) -> RngStream {
    RngStream::new(seed, 0).child(trial as u64)
}

fn check_world(cfg: &ScenarioConfig, world: &World) -> Result<(), UrbanError> {
    cfg.validate()?;
    if world.vendors.is_empty() {
        return Err(UrbanError::NoVendors);
    }
    if world.customers.is_empty() {
        return Err(UrbanError::NoCustomers);
    }
    if cfg.planner == Planner::RrtStar {
        let grid = world.grid.as_ref().ok_or(UrbanError::MissingGrid)?;
        if grid.altitude != cfg.altitude_ft {
            return Err(UrbanError::InvalidConfig(format!(
                "occupancy grid is at {} ft but the scenario flies at {} ft",
                grid.altitude.0, cfg.altitude_ft.0
            )));
        }
    }
    if cfg.n_receivers > world.candidate_sites.len() {
        return Err(UrbanError::TooManyReceivers {
            requested: cfg.n_receivers,
            available: world.candidate_sites.len(),
        });
    }
    Ok(())
}

/// Runs `cfg.n_trials` trials of `cfg.trajectories_per_trial` trajectories.
///
/// Each trial draws its receivers (or reuses one scenario-wide draw when
/// `redraw_receivers` is off) and plans every trajectory from an OD pair of
/// a uniform vendor and a uniform customer. Results depend only on the seed.
pub fn evaluate_scenario(cfg: &ScenarioConfig, world: &World) -> Result<ScenarioResult, UrbanError> {
    check_world(cfg, world)?;
    let fixed = if cfg.redraw_receivers {
        None
    } else {
        let mut rng = RngStream::new(cfg.seed, 1).rng();
        Some(place_receivers(cfg.n_receivers, &world.candidate_sites, cfg.tech, &mut rng)?)
    };
    run_trials(cfg, world, |t| match &fixed {
        Some(d) => Ok(d.clone()),
        None => place_receivers(cfg.n_receivers, &world.candidate_sites, cfg.tech, &mut trial_stream(cfg.seed, t).rng()),
    })
}

/// As [`evaluate_scenario`] with `deployment` used in every trial.
pub fn evaluate_deployment(
    cfg: &ScenarioConfig,
    world: &World,
    deployment: &ReceiverDeployment,
) -> Result<ScenarioResult, UrbanError> {
    let cfg = ScenarioConfig { n_receivers: 0, tech: deployment.tech, ..cfg.clone() };
    check_world(&cfg, world)?;
    let mut result = run_trials(&cfg, world, |_| Ok(deployment.clone()))?;
    result.n_receivers = deployment.centers.len();
    Ok(result)
}

fn run_trials<F>(cfg: &ScenarioConfig, world: &World, deploy: F) -> Result<ScenarioResult, UrbanError>
where
    F: Fn(usize) -> Result<ReceiverDeployment, UrbanError> + Sync,
{
    let trials: Vec<(Vec<f64>, usize)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| {
            let index = deploy(t)?.index();
            let (trajectories, failures) = trial_trajectories(cfg, world, t)?;
            let cov: Vec<f64> = trajectories.par_iter().map(|tr| index.coverage(&tr.waypoints)).collect();
            Ok((cov, failures))
        })
        .collect::<Result<_, UrbanError>>()?;

    let per_trial_means: Vec<f64> = trials
        .iter()
        .map(|(c, _)| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let moments: Moments = per_trial_means.iter().copied().collect();
    let coverages: Vec<f64> = trials.iter().flat_map(|(c, _)| c.iter().copied()).collect();
    let running = running_means(&coverages);
    let overall_mean = *running.last().expect("at least one trajectory");
    Ok(ScenarioResult {
        overall_mean,
        std_error: if per_trial_means.len() > 1 { moments.estimate().std_error } else { 0.0 },
        converged: convergence_check(&running, cfg.convergence_window, cfg.convergence_tolerance),
        running_means: running,
        failures: trials.iter().map(|(_, f)| f).sum(),
        per_trial_means,
        n_receivers: cfg.n_receivers,
        coverages,
    })
}

/// Outcome of a receiver-count search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSearch {
    pub n_receivers: usize,
    pub achieved_mean: f64,
    /// Every `(n, mean)` evaluated, ascending in `n`.
    pub evaluations: Vec<(usize, f64)>,
    pub failures: usize,
}

/// Smallest tested receiver count whose mean coverage reaches `target`,
/// found by doubling from `lower` and then bisecting. `upper` is capped at
/// the number of candidate sites.
pub fn find_receiver_count(
    target: f64,
    template: &ScenarioConfig,
    world: &World,
    lower: usize,
    upper: usize,
) -> Result<ReceiverSearch, UrbanError> {
    if !(target <= 1.0) {
        return Err(UrbanError::InvalidConfig(format!("target {target} is not a proportion")));
    }
    if target <= 0.0 {
        return Ok(ReceiverSearch { n_receivers: 0, achieved_mean: 0.0, evaluations: Vec::new(), failures: 0 });
    }
    let upper = upper.min(world.candidate_sites.len());
    if upper == 0 {
        return Err(UrbanError::Unreachable { target, upper, best_n: 0, best_mean: 0.0 });
    }
    let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
    let mut failures = 0;
    let mut eval = |n: usize| -> Result<f64, UrbanError> {
        if let Some(m) = seen.get(&n) {
            return Ok(*m);
        }
        let r = evaluate_scenario(&ScenarioConfig { n_receivers: n, ..template.clone() }, world)?;
        failures += r.failures;
        seen.insert(n, r.overall_mean);
        Ok(r.overall_mean)
    };

    let mut below = 0usize;
    let mut n = lower.clamp(1, upper);
    loop {
        if eval(n)? >= target {
            break;
        }
        below = n;
        if n == upper {
            let (best_n, best_mean) = seen
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(n, m)| (*n, *m))
                .expect("evaluated");
            return Err(UrbanError::Unreachable { target, upper, best_n, best_mean });
        }
        n = (n * 2).min(upper);
    }
    let mut above = n;
    while above - below > 1 {
        let mid = below + (above - below) / 2;
        if eval(mid)? >= target {
            above = mid;
        } else {
            below = mid;
        }
    }
    let achieved_mean = seen[&above];
    Ok(ReceiverSearch {
        n_receivers: above,
        achieved_mean,
        evaluations: seen.into_iter().collect(),
        failures,
    })
}

/// `trajectory_index,running_mean` rows, 1-based.
pub fn write_running_means_csv<W: Write>(running_means: &[f64], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trajectory_index", "running_mean"])?;
    for (i, m) in running_means.iter().enumerate() {
        w.write_record([(i + 1).to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Compact JSON summary of a scenario or a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub tech: ReceiverTech,
    pub planner: Planner,
    pub altitude_ft: f64,
    pub target: Option<f64>,
    pub n_receivers: usize,
    pub achieved_mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub trajectories_per_trial: usize,
    pub failures: usize,
    pub converged: bool,
}

impl ScenarioSummary {
    pub fn new(cfg: &ScenarioConfig, target: Option<f64>, result: &ScenarioResult) -> Self {
        Self {
            tech: cfg.tech,
            planner: cfg.planner,
            altitude_ft: cfg.altitude_ft.0,
            target,
            n_receivers: result.n_receivers,
            achieved_mean: result.overall_mean,
            std_error: result.std_error,
            trials: cfg.n_trials,
            trajectories_per_trial: cfg.trajectories_per_trial,
            failures: result.failures,
            converged: result.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sites(n: usize) -> Vec<Point2> {
        (0..n).map(|i| Point2::new(i as f64, 0.0)).collect()
    }

    #[test]
    fn placement_bounds() {
        let s = sites(10);
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(place_receivers(10, &s, ReceiverTech::R250, &mut rng).unwrap().centers, s);
        assert!(place_receivers(0, &s, ReceiverTech::R250, &mut rng).unwrap().centers.is_empty());
        assert!(matches!(
            place_receivers(11, &s, ReceiverTech::R250, &mut rng),
            Err(UrbanError::TooManyReceivers { requested: 11, available: 10 })
        ));
        let a = place_receivers(4, &s, ReceiverTech::R250, &mut RngStream::new(9, 0).rng()).unwrap();
        let b = place_receivers(4, &s, ReceiverTech::R250, &mut RngStream::new(9, 0).rng()).unwrap();
        assert_eq!(a, b);
        let mut c = a.centers.clone();
        c.dedup();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn convergence() {
        assert!(convergence_check(&[0.5; 100], 50, 0.0));
        let alternating: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        assert!(!convergence_check(&alternating, 50, 0.1));
        assert!(!convergence_check(&[0.5; 50], 50, 1.0));
        assert_eq!(running_means(&[1.0, 0.0, 0.5]), vec![1.0, 0.5, 0.5]);
    }

    #[test]
    fn tech_radii() {
        assert_eq!(ReceiverTech::R250.radius(), 250.0);
        assert_eq!(ReceiverTech::R1000.radius(), 1000.0);
        assert_eq!(ReceiverTech::R2000.radius(), 2000.0);
        assert_eq!("r2000".parse::<ReceiverTech>().unwrap(), ReceiverTech::R2000);
    }

    fn line_world() -> World {
        World {
            vendors: vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1000.0)],
            customers: (0..20).map(|i| Point2::new(1000.0 + 50.0 * i as f64, 500.0)).collect(),
            candidate_sites: (0..40).map(|i| Point2::new(50.0 * i as f64, 500.0)).collect(),
            grid: None,
        }
    }

    fn small_cfg(n: usize) -> ScenarioConfig {
        ScenarioConfig {
            tech: ReceiverTech::R250,
            n_receivers: n,
            n_trials: 4,
            trajectories_per_trial: 50,
            seed: 17,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_receivers_cover_nothing() {
        let r = evaluate_scenario(&small_cfg(0), &line_world()).unwrap();
        assert_eq!(r.overall_mean, 0.0);
        assert_eq!(r.per_trial_means.len(), 4);
        assert_eq!(r.running_means.len(), 200);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let w = line_world();
        let a = evaluate_scenario(&small_cfg(5), &w).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| evaluate_scenario(&small_cfg(5), &w)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.coverages, b.coverages);
    }

    #[test]
    fn search_finds_a_feasible_count() {
        let w = line_world();
        let all = evaluate_scenario(&small_cfg(40), &w).unwrap().overall_mean;
        let target = all - 0.05;
        let s = find_receiver_count(target, &small_cfg(0), &w, 1, 1000).unwrap();
        assert!(s.n_receivers <= 40);
        assert!(s.achieved_mean >= target);
        assert!(s.evaluations.iter().any(|(n, _)| *n == s.n_receivers));
        assert_eq!(find_receiver_count(0.0, &small_cfg(0), &w, 1, 10).unwrap().n_receivers, 0);
        match find_receiver_count(0.999999, &small_cfg(0), &w, 1, 1000) {
            Err(UrbanError::Unreachable { best_n, best_mean, .. }) => {
                assert!(best_n <= 40);
                assert!(best_mean < 0.999999);
            }
            other => panic!("expected unreachable, got {other:?}"),
        }
    }

    #[test]
    fn more_receivers_do_not_lower_the_mean() {
        let w = line_world();
        let runs: Vec<ScenarioResult> = [1, 3, 6, 12, 24]
            .iter()
            .map(|&n| evaluate_scenario(&ScenarioConfig { n_trials: 8, ..small_cfg(n) }, &w).unwrap())
            .collect();
        for (i, lo) in runs.iter().enumerate() {
            for hi in &runs[i + 1..] {
                let se = lo.std_error.hypot(hi.std_error);
                assert!(hi.overall_mean >= lo.overall_mean - 2.0 * se, "{} < {}", hi.overall_mean, lo.overall_mean);
            }
        }
    }

    #[test]
    fn rrt_requires_matching_grid() {
        let cfg = ScenarioConfig { planner: Planner::RrtStar, ..small_cfg(1) };
        assert!(matches!(evaluate_scenario(&cfg, &line_world()), Err(UrbanError::MissingGrid)));
    }

    #[test]
    fn running_mean_csv() {
        let mut buf = Vec::new();
        write_running_means_csv(&[0.5, 0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trajectory_index,running_mean\n1,0.5\n2,0.25\n");
    }
}
