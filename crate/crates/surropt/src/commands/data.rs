use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use surropt_core::dataset::{gen_dataset, load_csv, write_csv, DatasetMetadata};
use surropt_core::LAYOUT_DIM;

use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};
use crate::manifest::{Manifest, Outputs};

fn split_path(out: &Path) -> Result<(&Path, String, String)> {
    let name = out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| ExperimentError::Config(format!("{}: not a file path", out.display())))?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    Ok((dir, name.to_string(), format!("{stem}.meta.json")))
}

/// Labels `count` uniform layouts with the synthetic oracle and writes them
/// to `out`, with a `<stem>.meta.json` sidecar.
pub fn gen_data(cfg: &ExperimentConfig, count: usize, out: &Path) -> Result<Manifest> {
    let started = Instant::now();
    let oracle = cfg.oracle_config();
    let records = gen_dataset(count, &oracle)?;
    let (dir, name, meta_name) = split_path(out)?;
    let mut outputs = Outputs::new(dir)?;
    let path = outputs.path(&name)?;
    write_csv(&path, &records)?;
    let meta = DatasetMetadata {
        format: "csv".into(),
        count,
        dim: LAYOUT_DIM,
        source: "synthetic-oracle".into(),
        oracle: Some(oracle.clone()),
    };
    meta.write(&outputs.path(&meta_name)?)?;
    log::info!("wrote {count} samples to {}", path.display());
    let seeds = BTreeMap::from([
        ("base_seed".to_string(), cfg.base_seed),
        ("oracle_seed".to_string(), oracle.seed),
    ]);
    outputs.finish("gen-data", seeds, started.elapsed().as_secs_f64())
}

/// Copies an existing data set to `out` after checking that it loads.
pub fn import_data(src: &Path, out: &Path) -> Result<Manifest> {
    let started = Instant::now();
    let records = load_csv(src)?;
    let (dir, name, meta_name) = split_path(out)?;
    let mut outputs = Outputs::new(dir)?;
    let bytes = crate::manifest::read(src)?;
    outputs.write(&name, bytes)?;
    let meta = DatasetMetadata {
        format: "csv".into(),
        count: records.len(),
        dim: LAYOUT_DIM,
        source: src.display().to_string(),
        oracle: None,
    };
    meta.write(&outputs.path(&meta_name)?)?;
    outputs.finish("import-data", BTreeMap::new(), started.elapsed().as_secs_f64())
}
