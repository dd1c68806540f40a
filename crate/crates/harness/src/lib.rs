//! Declarative experiment runner: sweeps a configuration grid, evaluates each
//! bound against its oracle and writes CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Theorem};
pub use error::{HarnessError, Result};
pub use report::{Row, RunReport, CSV_COLUMNS};
pub use runner::evaluate;

/// Overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub theorems: Option<Vec<Theorem>>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: RunReport,
}

/// Output base directory: `--out`, then the configuration's `output_dir`, then `runs`.
pub fn resolve_out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn apply_overrides(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = &opts.theorems {
        cfg.theorems = t.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn evaluate_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunReport> {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HarnessError::config(format!("workers: {e}")))?;
        return pool.install(|| evaluate(cfg));
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    evaluate(cfg)
}

/// Evaluates and writes a new run directory under the resolved output base.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let cfg = apply_overrides(cfg, opts)?;
    let report = evaluate_with_workers(&cfg, opts.workers)?;
    let dir = report::create_run_dir(&resolve_out_dir(&cfg, opts), &cfg.name)?;
    report::write_report(&dir, &report, &cfg, opts.workers)?;
    Ok(RunOutcome { dir, report })
}

pub fn run_config_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    run_experiment(&ExperimentConfig::load(path)?, opts)
}
