use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use ridcov::analytic::ChordLaw;
use ridcov::geo::{Feet, DEFAULT_CELL_SIZE_M};
use ridcov::geometry::Point2;
use ridcov::hybrid::{hybrid_report, pack_region, HybridReport};
use ridcov::planning::{Planner, TrajectoryRecord};
use ridcov::quadrature::QuadratureConfig;
use ridcov::rng::RngStream;
use ridcov::urban::{trial_trajectories, DiskIndex, ReceiverTech, ScenarioConfig, World, DEFAULT_CUSTOMER_POOL};
use serde::{Deserialize, Serialize};

use crate::config::{self, CityFiles};
use crate::output::{ManifestDraft, OutputSet};
use crate::Failure;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Hybrid config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// UDE or UDM.
    #[arg(long)]
    case: Option<ChordLaw>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    /// City to pack and, unless `trajectories` is given, to fly over.
    #[serde(default)]
    pub city: Option<CityFiles>,
    /// Region to pack in local meters; overrides the city boundary.
    #[serde(default)]
    pub region: Option<Vec<[f64; 2]>>,
    /// Trajectory JSON lines in local meters.
    #[serde(default)]
    pub trajectories: Option<PathBuf>,
    pub r_e: f64,
    #[serde(default)]
    pub r_c: Option<f64>,
    #[serde(default)]
    pub tech: Option<ReceiverTech>,
    #[serde(default = "default_case")]
    pub case: ChordLaw,
    #[serde(default = "default_n")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_planner")]
    pub planner: Planner,
    #[serde(default = "default_altitude")]
    pub altitude_ft: f64,
    #[serde(default = "default_cell")]
    pub cell_size_m: f64,
    #[serde(default = "default_pool")]
    pub customer_pool: usize,
    /// Also report the exact coverage with receivers at the packing centers.
    #[serde(default)]
    pub compare_direct: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_case() -> ChordLaw {
    ChordLaw::Ude
}
fn default_n() -> usize {
    1000
}
fn default_planner() -> Planner {
    Planner::Slpp
}
fn default_altitude() -> f64 {
    200.0
}
fn default_cell() -> f64 {
    DEFAULT_CELL_SIZE_M
}
fn default_pool() -> usize {
    DEFAULT_CUSTOMER_POOL
}

#[derive(Serialize)]
struct Output {
    #[serde(flatten)]
    report: HybridReport,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct_coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_difference: Option<f64>,
}

fn read_trajectories(path: &std::path::Path) -> Result<Vec<Vec<Point2>>, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: TrajectoryRecord = serde_json::from_str(l)
                .with_context(|| format!("{} line {}", path.display(), i + 1))?;
            Ok(r.waypoints.into_iter().map(Point2::from).collect())
        })
        .collect::<anyhow::Result<_>>()
        .map_err(Failure::Data)
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let (mut cfg, base): (HybridConfig, _) = config::load(&args.config)?;
    if let Some(c) = cfg.city.as_mut() {
        c.resolve(&base);
    }
    cfg.trajectories = cfg.trajectories.as_deref().map(|p| config::resolve(&base, p));
    cfg.output_dir = cfg.output_dir.as_deref().map(|p| config::resolve(&base, p));
    if let Some(c) = args.case {
        cfg.case = c;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let r_c = match (cfg.r_c, cfg.tech) {
        (Some(r), None) => r,
        (None, Some(t)) => t.radius(),
        _ => return Err(Failure::usage("give exactly one of r_c and tech")),
    };
    let out_dir = args.out_dir.clone().or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));

    let city = cfg.city.as_ref().map(CityFiles::load).transpose()?;
    let region: Vec<Point2> = match (&cfg.region, &city) {
        (Some(r), _) => r.iter().map(|p| Point2::from(*p)).collect(),
        (None, Some(c)) => c.roi.boundary.clone(),
        (None, None) => return Err(Failure::usage("config needs `region` or `city`")),
    };
    let packing = pack_region(&region, cfg.r_e, r_c).map_err(|e| Failure::usage(e.to_string()))?;
    for w in &packing.warnings {
        eprintln!("warning: {w}");
    }

    let paths: Vec<Vec<Point2>> = match (&cfg.trajectories, &city) {
        (Some(p), _) => read_trajectories(p)?,
        (None, Some(c)) => {
            let scenario = ScenarioConfig {
                altitude_ft: Feet(cfg.altitude_ft),
                planner: cfg.planner,
                n_trials: 1,
                trajectories_per_trial: cfg.n_trajectories,
                seed: cfg.seed,
                ..ScenarioConfig::default()
            };
            let grid = match cfg.planner {
                Planner::RrtStar => Some(
                    c.occupancy_grid(scenario.altitude_ft, cfg.cell_size_m)
                        .map_err(|e| Failure::usage(e.to_string()))?,
                ),
                Planner::Slpp => None,
            };
            let world = World::from_city(c, cfg.customer_pool, grid, RngStream::new(cfg.seed, 2))
                .map_err(|e| Failure::Data(e.into()))?;
            let (trajs, _) = trial_trajectories(&scenario, &world, 0).map_err(|e| Failure::Data(e.into()))?;
            trajs.into_iter().map(|t| t.waypoints).collect()
        }
        (None, None) => return Err(Failure::usage("config needs `trajectories` or `city`")),
    };

    let report = hybrid_report(paths.iter().map(Vec::as_slice), &packing, cfg.case, &QuadratureConfig::default())
        .map_err(|e| Failure::Data(e.into()))?;
    let direct_coverage = cfg.compare_direct.then(|| {
        let index = DiskIndex::new(&packing.centers, r_c);
        paths.iter().map(|p| index.coverage(p)).sum::<f64>() / paths.len().max(1) as f64
    });
    eprintln!(
        "K={} estimate={:.4} epsilon={:.4}{}",
        report.k,
        report.estimate,
        report.epsilon,
        direct_coverage.map(|d| format!(" direct={d:.4}")).unwrap_or_default()
    );
    let output = Output {
        abs_difference: direct_coverage.map(|d| (d - report.estimate).abs()),
        direct_coverage,
        warnings: packing.warnings.clone(),
        report,
    };
    let mut out = OutputSet::new(&out_dir);
    out.add_json("hybrid_report.json", &output)?;
    for p in out.commit(ManifestDraft::new("hybrid", &cfg, Some(cfg.seed), started)?)? {
        eprintln!("wrote {p}");
    }
    Ok(())
}
