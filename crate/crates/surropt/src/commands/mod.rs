//! One function per CLI subcommand. Each writes its files plus a
//! `manifest.json` into its output directory.

mod compare;
mod data;
mod optimize;
mod report;
mod train;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use compare::{compare, parse_trace_name, CompareOutcome, ScenarioSummary};
pub use data::{gen_data, import_data};
pub use optimize::{optimize, OptimizeOutcome, RunRecord};
pub use report::{report, Report};
pub use train::{train, TrainOutcome};

use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "SURROPT_WORKERS";

pub const DATA_DIR: &str = "data";
pub const MODELS_DIR: &str = "models";
pub const OPTIMIZE_DIR: &str = "optimize";
pub const COMPARE_DIR: &str = "compare";
pub const DATASET_FILE: &str = "dataset.csv";

/// Pool sized by [`WORKERS_ENV`], or rayon's default when unset.
pub(crate) fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ExperimentError::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| ExperimentError::Config(format!("worker pool: {e}")))
}

/// gen-data (or import of `data.path`), train, optimize, compare and report
/// into one bundle directory.
pub fn pipeline(cfg: &ExperimentConfig, bundle: &Path) -> Result<Report> {
    let started = Instant::now();
    let data_path: PathBuf = bundle.join(DATA_DIR).join(DATASET_FILE);
    match &cfg.data.path {
        Some(src) => import_data(src, &data_path)?,
        None => gen_data(cfg, cfg.data.count, &data_path)?,
    };
    train(cfg, &data_path, &cfg.surrogate_spec_indices, &bundle.join(MODELS_DIR))?;
    optimize(cfg, &bundle.join(MODELS_DIR), &bundle.join(OPTIMIZE_DIR))?;
    compare(cfg, &bundle.join(OPTIMIZE_DIR), &bundle.join(COMPARE_DIR))?;
    let r = report(bundle)?;
    log::info!("pipeline finished in {:.1} s", started.elapsed().as_secs_f64());
    Ok(r)
}

pub(crate) fn fmt_row<I, T>(cells: I) -> String
where
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let mut s = String::new();
    for (k, c) in cells.into_iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(&c.to_string());
    }
    s.push('\n');
    s
}
