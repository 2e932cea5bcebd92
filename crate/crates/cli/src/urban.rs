use std::path::PathBuf;
use std::time::Instant;

use ridcov::geo::{Feet, DEFAULT_CELL_SIZE_M};
use ridcov::planning::Planner;
use ridcov::rng::RngStream;
use ridcov::urban::{
    evaluate_scenario, find_receiver_count, trial_trajectories, write_running_means_csv, ReceiverSearch, ReceiverTech,
    ScenarioConfig, ScenarioSummary, UrbanError, World, DEFAULT_CUSTOMER_POOL,
};
use serde::{Deserialize, Serialize};

use crate::config::{self, CityFiles};
use crate::output::{ManifestDraft, OutputSet};
use crate::Failure;

/// Stream id of the customer pool draw, kept apart from scenario streams.
const CUSTOMER_STREAM: u64 = 2;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Search for the receiver count reaching this mean coverage; repeatable.
    #[arg(long)]
    find_target: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    receivers: Option<usize>,
    /// R250, R1000 or R2000.
    #[arg(long)]
    tech: Option<ReceiverTech>,
    /// slpp or rrt_star.
    #[arg(long)]
    planner: Option<Planner>,
    /// Cruise altitude in feet.
    #[arg(long)]
    altitude_ft: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrbanConfig {
    pub city: CityFiles,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default = "default_cell")]
    pub cell_size_m: f64,
    #[serde(default = "default_pool")]
    pub customer_pool: usize,
    /// Seed of the customer pool; defaults to the scenario seed.
    #[serde(default)]
    pub customer_seed: Option<u64>,
    #[serde(default)]
    pub targets: Vec<f64>,
    #[serde(default = "default_lower")]
    pub search_lower: usize,
    #[serde(default = "default_upper")]
    pub search_upper: usize,
    /// Also write the first trial's trajectories as JSON lines.
    #[serde(default)]
    pub write_trajectories: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_cell() -> f64 {
    DEFAULT_CELL_SIZE_M
}
fn default_pool() -> usize {
    DEFAULT_CUSTOMER_POOL
}
fn default_lower() -> usize {
    1
}
fn default_upper() -> usize {
    100_000
}

fn classify(e: UrbanError) -> Failure {
    match e {
        UrbanError::Unreachable { .. } => Failure::Convergence(e.into()),
        UrbanError::InvalidConfig(_) | UrbanError::TooManyReceivers { .. } => Failure::Usage(e.into()),
        other => Failure::Data(other.into()),
    }
}

#[derive(Serialize)]
struct SearchRecord {
    #[serde(flatten)]
    summary: ScenarioSummary,
    evaluations: Vec<(usize, f64)>,
    search_failures: usize,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let (mut cfg, base): (UrbanConfig, _) = config::load(&args.config)?;
    cfg.city.resolve(&base);
    cfg.output_dir = cfg.output_dir.as_deref().map(|p| config::resolve(&base, p));
    let s = &mut cfg.scenario;
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.trials {
        s.n_trials = v;
    }
    if let Some(v) = args.trajectories {
        s.trajectories_per_trial = v;
    }
    if let Some(v) = args.receivers {
        s.n_receivers = v;
    }
    if let Some(v) = args.tech {
        s.tech = v;
    }
    if let Some(v) = args.planner {
        s.planner = v;
    }
    if let Some(v) = args.altitude_ft {
        s.altitude_ft = Feet(v);
    }
    if !args.find_target.is_empty() {
        cfg.targets = args.find_target.clone();
    }
    if let Some(t) = cfg.targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Failure::usage(format!("target {t} is not a proportion")));
    }
    cfg.scenario.validate().map_err(classify)?;
    let out_dir = args.out_dir.clone().or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));

    let city = cfg.city.load()?;
    let grid = match cfg.scenario.planner {
        Planner::RrtStar => Some(
            city.occupancy_grid(cfg.scenario.altitude_ft, cfg.cell_size_m)
                .map_err(|e| Failure::usage(e.to_string()))?,
        ),
        Planner::Slpp => None,
    };
    let customer_seed = cfg.customer_seed.unwrap_or(cfg.scenario.seed);
    let world = World::from_city(&city, cfg.customer_pool, grid, RngStream::new(customer_seed, CUSTOMER_STREAM))
        .map_err(classify)?;

    let mut out = OutputSet::new(&out_dir);
    let sc = &cfg.scenario;
    if cfg.targets.is_empty() {
        let result = evaluate_scenario(sc, &world).map_err(classify)?;
        eprintln!(
            "{} {} n={} mean={:.4} converged={} failures={}",
            sc.tech, sc.planner, result.n_receivers, result.overall_mean, result.converged, result.failures
        );
        out.add_json("summary.json", &ScenarioSummary::new(sc, None, &result))?;
        out.add_json("result.json", &result)?;
        let mut csv = Vec::new();
        write_running_means_csv(&result.running_means, &mut csv).map_err(|e| Failure::Data(e.into()))?;
        out.add("running_means.csv", csv);
    } else {
        let mut records = Vec::new();
        for (k, &target) in cfg.targets.iter().enumerate() {
            let ReceiverSearch { n_receivers, evaluations, failures, .. } =
                find_receiver_count(target, sc, &world, cfg.search_lower, cfg.search_upper).map_err(classify)?;
            let at_n = ScenarioConfig { n_receivers, ..sc.clone() };
            let result = evaluate_scenario(&at_n, &world).map_err(classify)?;
            eprintln!("{} target {target}: n={n_receivers} mean={:.4}", sc.tech, result.overall_mean);
            let mut csv = Vec::new();
            write_running_means_csv(&result.running_means, &mut csv).map_err(|e| Failure::Data(e.into()))?;
            out.add(format!("running_means_target{k}.csv"), csv);
            records.push(SearchRecord {
                summary: ScenarioSummary::new(&at_n, Some(target), &result),
                evaluations,
                search_failures: failures,
            });
        }
        out.add_json("search.json", &records)?;
    }
    if cfg.write_trajectories {
        let (trajs, _) = trial_trajectories(sc, &world, 0).map_err(classify)?;
        let mut lines = String::new();
        for t in trajs {
            lines.push_str(&serde_json::to_string(&t.record()).map_err(anyhow::Error::from)?);
            lines.push('\n');
        }
        out.add("trajectories.jsonl", lines.into_bytes());
    }
    for p in out.commit(ManifestDraft::new("urban", &cfg, Some(cfg.scenario.seed), started)?)? {
        eprintln!("wrote {p}");
    }
    Ok(())
}
