//! Atomic output files and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Output files collected in memory and written together at the end, each
/// through a temporary file in the destination directory and a rename.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn paths(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| self.dir.join(n).display().to_string()).collect()
    }

    /// Writes every file plus the manifest.
    pub fn commit(mut self, manifest: ManifestDraft) -> anyhow::Result<Vec<String>> {
        let mut outputs = self.paths();
        outputs.push(self.dir.join(MANIFEST_FILE).display().to_string());
        let manifest = manifest.finish(outputs.clone());
        self.add_json(MANIFEST_FILE, &manifest)?;
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        for (name, bytes) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
        }
        Ok(outputs)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub struct ManifestDraft {
    subcommand: String,
    config: serde_json::Value,
    seed: Option<u64>,
    started: Instant,
}

impl ManifestDraft {
    pub fn new<T: Serialize>(subcommand: &str, config: &T, seed: Option<u64>, started: Instant) -> anyhow::Result<Self> {
        Ok(Self { subcommand: subcommand.into(), config: serde_json::to_value(config)?, seed, started })
    }

    fn finish(self, outputs: Vec<String>) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}
