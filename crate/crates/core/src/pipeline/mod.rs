//! Experiment drivers: config resolution, the three experiments, and the
//! run manifest.

mod common;
pub mod config;
pub mod deep;
pub mod ergodicity;
pub mod leakage;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use common::{build_system, derive_seed, exact_states, System};
pub use config::{ExperimentConfig, ExperimentKind, Mode, NoiseConfig, NoiseKindName};
pub use output::{content_hash, FileRecord, OutputDir, SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::exec::{with_workers, Execution};
use crate::measurement::MitigationMode;

/// Command-line overrides applied before the config is resolved.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mitigation: Option<MitigationMode>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(m) = self.mode {
            cfg.mode = Some(m);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(m) = self.mitigation {
            cfg.mitigation = m;
        }
        cfg
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub exec: Execution,
    /// Size of a dedicated worker pool; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<FileRecord>,
    pub summary: serde_json::Value,
}

/// Resolve `cfg`, run its experiment into `cfg.output_dir`, and write
/// `resolved_config.json` and `manifest.json` next to the results.
/// `input` is the raw config text the run was started from, if any.
pub fn run(cfg: ExperimentConfig, input: Option<&[u8]>, opts: RunOptions) -> Result<RunReport> {
    let cfg = cfg.resolve()?;
    let resolved = serde_json::to_vec_pretty(&cfg)?;
    let input_hash = content_hash(input.unwrap_or(&resolved));
    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write_bytes("resolved_config.json", &resolved)?;
    let summary = with_workers(opts.workers, || match cfg.experiment {
        ExperimentKind::Ergodicity => ergodicity::run(&cfg, opts.exec, &mut out),
        ExperimentKind::DeepThermalization => deep::run(&cfg, opts.exec, &mut out),
        ExperimentKind::Leakage => leakage::run(&cfg, opts.exec, &mut out),
    })?;
    let files = out.files().to_vec();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "input_hash": input_hash,
        "files": files,
    });
    out.write_json("manifest.json", &manifest)?;
    Ok(RunReport { output_dir: cfg.output_dir.clone(), files, summary })
}

/// Load a config file, apply overrides and run it.
pub fn run_file(path: &Path, overrides: &Overrides, opts: RunOptions) -> Result<RunReport> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let cfg = ExperimentConfig::from_json_str(
        std::str::from_utf8(&text).map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?,
        path,
    )?;
    run(overrides.apply(cfg), Some(&text), opts)
}
