//! `ridcov`: expected Remote ID coverage experiments.

mod analytic;
mod config;
mod hybrid;
mod ingest;
mod mc_verify;
mod output;
mod urban;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Units: radii and lengths in meters, altitudes in feet, angles in radians.
#[derive(Debug, Parser)]
#[command(name = "ridcov", version, about = "Expected coverage of drone trajectories by Remote ID receivers")]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form expected coverage for both chord laws.
    Analytic(analytic::Args),
    /// Closed form against Monte Carlo over a grid of radii.
    McVerify(mc_verify::Args),
    /// City-scale scenario evaluation or receiver-count search.
    Urban(urban::Args),
    /// Packing-based hybrid coverage estimate.
    Hybrid(hybrid::Args),
    /// Parse city data and dump occupancy grids.
    IngestCheck(ingest::Args),
}

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Convergence(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Convergence(_) => 3,
        }
    }
}

/// Writes to standard output; a closed pipe is not an error.
pub fn emit(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Data(e.into())),
        _ => Ok(()),
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (kind, e) = match self {
            Failure::Usage(e) => ("usage error", e),
            Failure::Data(e) => ("error", e),
            Failure::Convergence(e) => ("did not converge", e),
        };
        write!(f, "{kind}: {e:#}")
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("{}", Failure::usage("--threads must be at least 1"));
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Analytic(a) => analytic::run(a),
        Command::McVerify(a) => mc_verify::run(a),
        Command::Urban(a) => urban::run(a),
        Command::Hybrid(a) => hybrid::run(a),
        Command::IngestCheck(a) => ingest::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}
