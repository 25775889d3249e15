use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use surropt_core::de::VariantId;

use super::compare::{ScenarioSummary, SUMMARY_FILE};
use super::train::{BestSpec, BEST_SPECS_FILE};
use super::{COMPARE_DIR, DATA_DIR, MODELS_DIR, OPTIMIZE_DIR};
use crate::error::{ExperimentError, Result};
use crate::manifest::{Manifest, Outputs, MANIFEST_FILE};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestObjective {
    pub scenario: u32,
    pub variant: VariantId,
    pub run_index: usize,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantFinal {
    pub scenario: u32,
    pub variant: VariantId,
    pub mean_final_best: f64,
    pub runs: usize,
}

/// Summary of a bundle. Contains no wall-clock values, so it is identical
/// whenever the bundle contents are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub base_seed: Option<u64>,
    pub best_mse: Vec<BestSpec>,
    pub best_objective: Vec<BestObjective>,
    pub mean_final: Vec<VariantFinal>,
    pub significance: Vec<ScenarioSummary>,
    pub warnings: Vec<String>,
}

struct Row {
    variant: VariantId,
    scenario: u32,
    run_index: usize,
    seed: u64,
    final_best: f64,
}

fn parse_runs(text: &str) -> std::result::Result<Vec<Row>, String> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("variant,scenario,run_index,seed,final_best") {
        return Err(format!("unexpected header {header:?}"));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let c: Vec<&str> = line.split(',').collect();
            let err = |what: &str| format!("line {}: bad {what}", k + 2);
            if c.len() < 5 {
                return Err(err("row"));
            }
            Ok(Row {
                variant: c[0].parse().map_err(|_| err("variant"))?,
                scenario: c[1].parse().map_err(|_| err("scenario"))?,
                run_index: c[2].parse().map_err(|_| err("run_index"))?,
                seed: c[3].parse().map_err(|_| err("seed"))?,
                final_best: c[4].parse().map_err(|_| err("final_best"))?,
            })
        })
        .collect()
}

/// Verifies the stage manifests of `bundle`, collects the headline numbers
/// into `report.json` and writes a bundle-level manifest. Missing or altered
/// artifacts become warnings; the report is still written.
pub fn report(bundle: &Path) -> Result<Report> {
    let started = Instant::now();
    if !bundle.is_dir() {
        return Err(ExperimentError::Artifact {
            path: bundle.into(),
            message: "bundle directory does not exist".into(),
        });
    }
    let mut warnings = Vec::new();
    let mut manifests = BTreeMap::new();
    for stage in [DATA_DIR, MODELS_DIR, OPTIMIZE_DIR, COMPARE_DIR] {
        let dir = bundle.join(stage);
        match Manifest::load(&dir) {
            Ok(m) => {
                warnings.extend(m.verify(&dir).into_iter().map(|w| format!("{stage}: {w}")));
                manifests.insert(stage, m);
            }
            Err(_) => warnings.push(format!("{stage}: missing {MANIFEST_FILE}")),
        }
    }

    let mut read_json = |stage: &str, file: &str| -> Option<Vec<u8>> {
        match std::fs::read(bundle.join(stage).join(file)) {
            Ok(b) => Some(b),
            Err(_) => {
                let w = format!("{stage}: missing file: {file}");
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
                None
            }
        }
    };
    let best_mse_bytes = read_json(MODELS_DIR, BEST_SPECS_FILE);
    let runs_bytes = read_json(OPTIMIZE_DIR, "runs.csv");
    let summary_bytes = read_json(COMPARE_DIR, SUMMARY_FILE);

    let best_mse: Vec<BestSpec> = match best_mse_bytes.map(|b| serde_json::from_slice(&b)) {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            warnings.push(format!("{MODELS_DIR}: {BEST_SPECS_FILE}: {e}"));
            Vec::new()
        }
        None => Vec::new(),
    };
    let significance: Vec<ScenarioSummary> = match summary_bytes.map(|b| serde_json::from_slice(&b)) {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            warnings.push(format!("{COMPARE_DIR}: {SUMMARY_FILE}: {e}"));
            Vec::new()
        }
        None => Vec::new(),
    };
    let rows = match runs_bytes.map(|b| parse_runs(&String::from_utf8_lossy(&b))) {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            warnings.push(format!("{OPTIMIZE_DIR}: runs.csv: {e}"));
            Vec::new()
        }
        None => Vec::new(),
    };

    let mut best: BTreeMap<u32, BestObjective> = BTreeMap::new();
    let mut finals: BTreeMap<(u32, VariantId), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        finals.entry((r.scenario, r.variant)).or_default().push(r.final_best);
        let candidate = BestObjective {
            scenario: r.scenario,
            variant: r.variant,
            run_index: r.run_index,
            seed: r.seed,
            value: r.final_best,
        };
        best.entry(r.scenario)
            .and_modify(|b| {
                if r.final_best < b.value {
                    *b = candidate.clone();
                }
            })
            .or_insert(candidate);
    }
    let mean_final = finals
        .into_iter()
        .map(|((scenario, variant), mut v)| {
            v.sort_by(f64::total_cmp);
            VariantFinal {
                scenario,
                variant,
                mean_final_best: v.iter().sum::<f64>() / v.len() as f64,
                runs: v.len(),
            }
        })
        .collect();

    let base_seed = manifests.values().find_map(|m| m.seeds.get("base_seed").copied());
    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        base_seed,
        best_mse,
        best_objective: best.into_values().collect(),
        mean_final,
        significance,
        warnings,
    };
    for w in &report.warnings {
        log::warn!("{w}");
    }

    let mut out = Outputs::new(bundle)?;
    out.write_json(REPORT_FILE, &report)?;
    for (stage, m) in &manifests {
        out.path(&format!("{stage}/{MANIFEST_FILE}"))?;
        for f in &m.files {
            if bundle.join(stage).join(&f.path).is_file() {
                out.path(&format!("{stage}/{}", f.path))?;
            }
        }
    }
    let seeds = base_seed
        .map(|s| BTreeMap::from([("base_seed".to_string(), s)]))
        .unwrap_or_default();
    out.finish("report", seeds, started.elapsed().as_secs_f64())?;
    Ok(report)
}
