use std::path::PathBuf;
use std::time::Instant;

use ridcov::montecarlo::{
    verification_sweep, write_sweep_csv, DEFAULT_COVERAGE_FRACTIONS, DEFAULT_ENVIRONMENT_RADII, DEFAULT_SWEEP_TRIALS,
};
use serde::Serialize;

use crate::analytic::QuadArgs;
use crate::output::{ManifestDraft, OutputSet};
use crate::Failure;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Environment radii, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ENVIRONMENT_RADII.to_vec())]
    re_grid: Vec<f64>,
    /// Coverage radii as fractions of r_e, comma separated, each in (0, 1].
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_COVERAGE_FRACTIONS.to_vec())]
    fractions: Vec<f64>,
    /// Chords sampled per cell.
    #[arg(long, default_value_t = DEFAULT_SWEEP_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    quad: QuadArgs,
    /// Directory for mc_verify.csv and the manifest.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let quad = args.quad.config()?;
    if args.re_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Failure::usage("--re-grid values must be positive"));
    }
    let rows = verification_sweep(&args.re_grid, &args.fractions, args.trials, args.seed, &quad)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).map_err(|e| Failure::Data(e.into()))?;
    let passing = rows.iter().filter(|r| r.within_four_std_errors()).count();
    eprintln!("{passing}/{} cells within 4 standard errors", rows.len());
    let mut out = OutputSet::new(&args.out_dir);
    out.add("mc_verify.csv", csv);
    for p in out.commit(ManifestDraft::new("mc-verify", &args, Some(args.seed), started)?)? {
        eprintln!("wrote {p}");
    }
    Ok(())
}
