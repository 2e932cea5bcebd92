use std::path::PathBuf;
use std::time::Instant;

use ridcov::analytic::{difference_curve, expected_coverage, rho_grid, ChordLaw};
use ridcov::geometry::CoverageGeometry;
use ridcov::quadrature::QuadratureConfig;
use serde::Serialize;

use crate::output::{ManifestDraft, OutputSet};
use crate::Failure;

#[derive(Debug, clap::Args, Serialize)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["rc", "rho_sweep"])))]
pub struct Args {
    /// Coverage radius (meters).
    #[arg(long, requires = "re")]
    rc: Option<f64>,
    /// Environment radius (meters).
    #[arg(long, requires = "rc")]
    re: Option<f64>,
    /// Sweep rho as START:END:STEP, e.g. 0:1:0.01.
    #[arg(long, value_name = "START:END:STEP", conflicts_with_all = ["rc", "re"])]
    rho_sweep: Option<String>,
    #[command(flatten)]
    quad: QuadArgs,
    /// Also write analytic.csv and a manifest into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct QuadArgs {
    #[arg(long, default_value_t = QuadratureConfig::default().relative_tolerance)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = QuadratureConfig::default().absolute_tolerance)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = QuadratureConfig::default().max_subdivisions)]
    pub max_subdivisions: usize,
}

impl QuadArgs {
    pub fn config(&self) -> Result<QuadratureConfig, Failure> {
        let cfg = QuadratureConfig {
            relative_tolerance: self.rel_tol,
            absolute_tolerance: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        };
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[start, end, step]) if (0.0..=1.0).contains(&start) && (start..=1.0).contains(&end) && step > 0.0 => {
            Ok(rho_grid(start, end, step))
        }
        _ => Err(Failure::usage(format!(
            "--rho-sweep expects START:END:STEP with 0 <= START <= END <= 1 and STEP > 0, got `{spec}`"
        ))),
    }
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let quad = args.quad.config()?;
    let mut csv = String::new();
    if let Some(spec) = &args.rho_sweep {
        let rhos = parse_sweep(spec)?;
        let curve = difference_curve(&rhos, &quad).map_err(|e| Failure::Data(e.into()))?;
        csv.push_str("rho,ude,udm,delta\n");
        for s in curve {
            csv.push_str(&format!("{},{},{},{}\n", s.rho, s.ude, s.udm, s.delta));
        }
    } else {
        let (rc, re) = (args.rc.expect("clap group"), args.re.expect("clap requires"));
        let geom = CoverageGeometry::centered(rc, re).map_err(|e| Failure::usage(format!("invalid radii: {e}")))?;
        let ude = expected_coverage(ChordLaw::Ude, &geom, &quad).map_err(|e| Failure::Data(e.into()))?;
        let udm = expected_coverage(ChordLaw::Udm, &geom, &quad).map_err(|e| Failure::Data(e.into()))?;
        csv.push_str("r_c,r_e,rho,ude,udm,delta\n");
        csv.push_str(&format!("{rc},{re},{},{},{},{}\n", geom.rho(), ude.value, udm.value, ude.value - udm.value));
    }
    crate::emit(&csv)?;
    if let Some(dir) = &args.out_dir {
        let mut out = OutputSet::new(dir);
        out.add("analytic.csv", csv.into_bytes());
        out.commit(ManifestDraft::new("analytic", &args, None, started)?)?;
    }
    Ok(())
}
