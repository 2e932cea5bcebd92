//! JSON config loading. Relative paths inside a config file are taken
//! relative to the file's directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use ridcov::geo::{CityData, ParseOptions, DEFAULT_BUILDING_HEIGHT_M};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, PathBuf), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::Data)?;
    let value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((value, base))
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
}

/// The themed GeoJSON files of a city.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityFiles {
    pub buildings: PathBuf,
    pub vendors: PathBuf,
    pub residential: PathBuf,
    /// Polygon feature collection bounding the study area.
    #[serde(default)]
    pub roi: Option<PathBuf>,
    #[serde(default = "default_height")]
    pub default_building_height_m: f64,
}

fn default_height() -> f64 {
    DEFAULT_BUILDING_HEIGHT_M
}

impl CityFiles {
    pub fn resolve(&mut self, base: &Path) {
        self.buildings = resolve(base, &self.buildings);
        self.vendors = resolve(base, &self.vendors);
        self.residential = resolve(base, &self.residential);
        self.roi = self.roi.as_deref().map(|p| resolve(base, p));
    }

    pub fn load(&self) -> Result<CityData, Failure> {
        if !(self.default_building_height_m.is_finite() && self.default_building_height_m >= 0.0) {
            return Err(Failure::usage("default_building_height_m must be non-negative"));
        }
        let opts = ParseOptions { default_height_m: self.default_building_height_m };
        let city = CityData::load(&self.buildings, &self.vendors, &self.residential, self.roi.as_deref(), &opts)
            .map_err(|e| Failure::Data(e.into()))?;
        for w in &city.report.warnings {
            eprintln!("warning: {w}");
        }
        Ok(city)
    }
}
