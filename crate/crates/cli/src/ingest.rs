use std::path::PathBuf;
use std::time::Instant;

use ridcov::geo::{Feet, GridHeader, IngestReport, DEFAULT_BUILDING_HEIGHT_M, DEFAULT_CELL_SIZE_M};
use serde::Serialize;

use crate::config::CityFiles;
use crate::output::{ManifestDraft, OutputSet};
use crate::Failure;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    buildings: PathBuf,
    #[arg(long)]
    vendors: PathBuf,
    #[arg(long)]
    residential: PathBuf,
    #[arg(long)]
    roi: Option<PathBuf>,
    /// Occupancy altitudes in feet; repeatable.
    #[arg(long = "altitude-ft", default_values_t = [200.0, 400.0])]
    altitudes_ft: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
    cell_size: f64,
    /// Height given to buildings without one, meters.
    #[arg(long, default_value_t = DEFAULT_BUILDING_HEIGHT_M)]
    default_height: f64,
    /// Write PGM grids, their headers and the report here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    ingest: IngestReport,
    roi_vertices: usize,
    grids: Vec<GridHeader>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let files = CityFiles {
        buildings: args.buildings.clone(),
        vendors: args.vendors.clone(),
        residential: args.residential.clone(),
        roi: args.roi.clone(),
        default_building_height_m: args.default_height,
    };
    let city = files.load()?;
    let mut out = args.out_dir.as_ref().map(OutputSet::new);
    let mut grids = Vec::new();
    for &alt in &args.altitudes_ft {
        if !(alt.is_finite() && alt >= 0.0) {
            return Err(Failure::usage(format!("altitude {alt} ft must be non-negative")));
        }
        let grid = city
            .occupancy_grid(Feet(alt), args.cell_size)
            .map_err(|e| Failure::usage(e.to_string()))?;
        let header = grid.header();
        if let Some(o) = out.as_mut() {
            let mut pgm = Vec::new();
            grid.write_pgm(&mut pgm).map_err(anyhow::Error::from)?;
            o.add(format!("occupancy_{alt}ft.pgm"), pgm);
            o.add_json(&format!("occupancy_{alt}ft.json"), &header)?;
        }
        grids.push(header);
    }
    let report = Report { ingest: city.report.clone(), roi_vertices: city.roi.boundary.len(), grids };
    crate::emit(&(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n"))?;
    if let Some(mut o) = out {
        o.add_json("ingest_report.json", &report)?;
        o.commit(ManifestDraft::new("ingest-check", &args, None, started)?)?;
    }
    Ok(())
}
