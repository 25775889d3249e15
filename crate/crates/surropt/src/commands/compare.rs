use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use surropt_core::de::{read_trace_csv, VariantId};
use surropt_core::stats::{pairwise_comparison_matrix, ComparisonMatrix, RunSet};

use super::fmt_row;
use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};
use crate::manifest::Outputs;

pub const SUMMARY_FILE: &str = "summary.json";

type SeededTrace = (u64, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub variant: VariantId,
    pub wins: usize,
    pub losses: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: u32,
    pub at_eval: usize,
    pub runs_per_variant: Vec<(VariantId, usize)>,
    /// Most wins first.
    pub ranking: Vec<RankEntry>,
    pub never_outperformed: Vec<VariantId>,
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub matrices: Vec<ComparisonMatrix>,
    pub summaries: Vec<ScenarioSummary>,
}

/// Splits `{VARIANT}_{scenario}_{seed}.csv` into its parts.
pub fn parse_trace_name(name: &str) -> Option<(VariantId, u32, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.split('_');
    let v = parts.next()?.parse().ok()?;
    let s = parts.next()?.parse().ok()?;
    let seed = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some((v, s, seed))
}

fn trace_dir(dir: &Path) -> PathBuf {
    let nested = dir.join("traces");
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Pairwise Wilcoxon matrices per scenario over every trace file in
/// `traces_dir` (or its `traces/` subdirectory).
pub fn compare(cfg: &ExperimentConfig, traces_dir: &Path, out_dir: &Path) -> Result<CompareOutcome> {
    let started = Instant::now();
    let dir = trace_dir(traces_dir);
    let entries = std::fs::read_dir(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    let mut names: Vec<String> = Vec::new();
    for e in entries {
        let e = e.map_err(|err| ExperimentError::io(&dir, err))?;
        if e.path().is_file() {
            names.push(e.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();

    let mut bad = Vec::new();
    let mut grouped: BTreeMap<u32, BTreeMap<VariantId, Vec<SeededTrace>>> = BTreeMap::new();
    for name in &names {
        let path = dir.join(name);
        let Some((v, s, seed)) = parse_trace_name(name) else {
            bad.push(format!("{}: name is not VARIANT_SCENARIO_SEED.csv", path.display()));
            continue;
        };
        match read_trace_csv(&path) {
            Ok(t) => grouped.entry(s).or_default().entry(v).or_default().push((seed, t)),
            Err(e) => bad.push(e.to_string()),
        }
    }
    if !bad.is_empty() {
        return Err(ExperimentError::UnparsableTraces(bad));
    }
    if grouped.is_empty() {
        return Err(ExperimentError::TooFewRunSets { scenario: 0, found: 0 });
    }

    let mut out = Outputs::new(out_dir)?;
    let mut matrices = Vec::new();
    let mut summaries = Vec::new();
    let mut summary_csv = String::from("scenario,rank,variant,wins,losses,median\n");
    for (scenario, by_variant) in grouped {
        if by_variant.len() < 2 {
            return Err(ExperimentError::TooFewRunSets {
                scenario,
                found: by_variant.len(),
            });
        }
        let mut runsets = Vec::new();
        for (v, mut runs) in by_variant {
            runs.sort_by_key(|(seed, _)| *seed);
            runsets.push(RunSet::new(v, scenario, runs.into_iter().map(|(_, t)| t).collect())?);
        }
        let m = pairwise_comparison_matrix(&runsets, cfg.compare.at_eval)?;
        out.write(&format!("scenario{scenario}_pvalues.csv"), m.p_value_csv())?;
        out.write(&format!("scenario{scenario}_significance.csv"), m.significance_csv())?;
        let ranking: Vec<RankEntry> = m
            .summary()
            .into_iter()
            .map(|s| RankEntry {
                variant: s.variant,
                wins: s.wins,
                losses: s.losses,
                median: s.median,
            })
            .collect();
        for (k, r) in ranking.iter().enumerate() {
            summary_csv.push_str(&fmt_row([
                scenario.to_string(),
                (k + 1).to_string(),
                r.variant.to_string(),
                r.wins.to_string(),
                r.losses.to_string(),
                r.median.to_string(),
            ]));
        }
        summaries.push(ScenarioSummary {
            scenario,
            at_eval: m.at_eval,
            runs_per_variant: m.variants.iter().copied().zip(m.sample_sizes.iter().copied()).collect(),
            ranking,
            never_outperformed: m.never_outperformed(),
        });
        matrices.push(m);
    }
    out.write("summary.csv", summary_csv)?;
    out.write_json(SUMMARY_FILE, &summaries)?;
    out.finish("compare", BTreeMap::new(), started.elapsed().as_secs_f64())?;
    Ok(CompareOutcome { matrices, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_names() {
        assert_eq!(parse_trace_name("SHADE_2_17.csv"), Some((VariantId::Shade, 2, 17)));
        assert_eq!(parse_trace_name("SHADE_2_17.txt"), None);
        assert_eq!(parse_trace_name("SHADE_2.csv"), None);
        assert_eq!(parse_trace_name("NOPE_1_1.csv"), None);
        assert_eq!(parse_trace_name("DERAND_1_1_9.csv"), None);
    }
}
