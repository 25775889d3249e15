use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use surropt_core::dataset::Metric;
use surropt_core::de::{run, trace_file_name, RunTrace, VariantId};
use surropt_core::objective::{scenario_weights, Objective, ScalarizedObjective, SearchSpace, Surrogate};
use surropt_core::stats::{aggregate, RunSet};
use surropt_core::surrogate::SurrogateModel;

use super::train::best_model_file;
use super::{fmt_row, worker_pool};
use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};
use crate::manifest::Outputs;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub variant: VariantId,
    pub scenario: u32,
    pub run_index: usize,
    pub seed: u64,
    pub trace: RunTrace,
    /// Surrogate predictions at the best layout, in data units.
    pub predictions: [f64; 3],
}

#[derive(Debug)]
pub struct OptimizeOutcome {
    pub runs: Vec<RunRecord>,
}

pub fn load_best_models(models_dir: &Path) -> Result<[SurrogateModel; 3]> {
    let load = |metric: Metric| {
        let path = models_dir.join(best_model_file(metric));
        if !path.is_file() {
            return Err(ExperimentError::MissingModel { metric, path });
        }
        SurrogateModel::load(&path).map_err(|e| ExperimentError::Artifact {
            path,
            message: e.to_string(),
        })
    };
    Ok([load(Metric::F1)?, load(Metric::F2)?, load(Metric::F3)?])
}

/// Runs every (scenario, variant, run) job on the weighted sum of the three
/// best surrogates over the unit box.
pub fn optimize(cfg: &ExperimentConfig, models_dir: &Path, out_dir: &Path) -> Result<OptimizeOutcome> {
    let started = Instant::now();
    let models = load_best_models(models_dir)?;
    let dim = models[0].input_dim();
    let surrogates: [Arc<dyn Surrogate>; 3] = models.clone().map(|m| Arc::new(m) as Arc<dyn Surrogate>);
    let space = SearchSpace::unit(dim);
    let mut objectives = BTreeMap::new();
    for &s in &cfg.scenario_ids {
        let w = scenario_weights(s).map_err(|e| ExperimentError::Config(e.to_string()))?;
        objectives.insert(s, ScalarizedObjective::new(w, surrogates.clone(), space.clone())?);
    }

    let jobs: Vec<(u32, VariantId, usize)> = cfg
        .scenario_ids
        .iter()
        .flat_map(|&s| {
            cfg.variants
                .iter()
                .flat_map(move |&v| (0..cfg.runs_per_variant).map(move |r| (s, v, r)))
        })
        .collect();
    let pool = worker_pool()?;
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(scenario, variant, run_index)| {
                let seed = cfg.run_seed(variant, scenario, run_index);
                let mut obj = objectives[&scenario].clone();
                let trace = run(variant, &mut obj, &cfg.de_config(seed))?;
                if obj.evaluations() as usize != cfg.budget || trace.best_so_far.len() != cfg.budget {
                    return Err(ExperimentError::Artifact {
                        path: out_dir.into(),
                        message: format!(
                            "{variant} scenario {scenario} run {run_index}: {} evaluations, trace length {}",
                            obj.evaluations(),
                            trace.best_so_far.len()
                        ),
                    });
                }
                let z = obj.components(&trace.best_x)?;
                let predictions = std::array::from_fn(|m| {
                    let model = &models[m];
                    model.target_mean
                        + if model.target_std > 0.0 {
                            z[m] * model.target_std
                        } else {
                            z[m]
                        }
                });
                Ok(RunRecord {
                    variant,
                    scenario,
                    run_index,
                    seed,
                    trace,
                    predictions,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = Outputs::new(out_dir)?;
    let mut runs_csv = String::from("variant,scenario,run_index,seed,final_best,trace_file\n");
    let mut layouts = fmt_row(
        [
            "variant",
            "scenario",
            "run_index",
            "seed",
            "objective",
            "f1",
            "f2",
            "f3",
        ]
        .map(String::from)
        .into_iter()
        .chain((1..=dim).map(|i| format!("u{i}"))),
    );
    let mut grouped: BTreeMap<(u32, VariantId), Vec<Vec<f64>>> = BTreeMap::new();
    let mut seeds = BTreeMap::from([("base_seed".to_string(), cfg.base_seed)]);
    for r in &runs {
        let name = trace_file_name(r.variant, r.scenario, r.seed);
        let rel = format!("traces/{name}");
        surropt_core::de::write_trace_csv(&out.path(&rel)?, &r.trace.best_so_far)?;
        runs_csv.push_str(&fmt_row([
            r.variant.to_string(),
            r.scenario.to_string(),
            r.run_index.to_string(),
            r.seed.to_string(),
            r.trace.final_best().to_string(),
            rel,
        ]));
        let head = [
            r.variant.to_string(),
            r.scenario.to_string(),
            r.run_index.to_string(),
            r.seed.to_string(),
            r.trace.final_best().to_string(),
        ];
        layouts.push_str(&fmt_row(
            head.into_iter()
                .chain(r.predictions.iter().map(|v| v.to_string()))
                .chain(r.trace.best_x.iter().map(|v| v.to_string())),
        ));
        grouped
            .entry((r.scenario, r.variant))
            .or_default()
            .push(r.trace.best_so_far.clone());
        seeds.insert(format!("run/{}/{}/{}", r.variant, r.scenario, r.run_index), r.seed);
    }
    out.write("runs.csv", runs_csv)?;
    out.write("best_layouts.csv", layouts)?;
    for ((scenario, variant), traces) in grouped {
        let agg = aggregate(&RunSet::new(variant, scenario, traces)?);
        let mut csv = String::from("eval_index,mean,std,min\n");
        for t in 0..agg.mean.len() {
            csv.push_str(&fmt_row([
                (t + 1).to_string(),
                agg.mean[t].to_string(),
                agg.std[t].to_string(),
                agg.min[t].to_string(),
            ]));
        }
        out.write(&format!("aggregate/{variant}_{scenario}.csv"), csv)?;
    }
    out.finish("optimize", seeds, started.elapsed().as_secs_f64())?;
    Ok(OptimizeOutcome { runs })
}
