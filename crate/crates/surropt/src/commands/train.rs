use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use surropt_core::dataset::{load_csv, split, Metric, NormalizationStats};
use surropt_core::surrogate::{fit_surrogate, table1_spec, NetworkSpec, SurrogateModel, TrainingReport};

use super::{fmt_row, worker_pool};
use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};
use crate::manifest::Outputs;

pub const BEST_SPECS_FILE: &str = "best_specs.json";
pub const MSE_TABLE_FILE: &str = "mse_table.csv";

pub fn model_file(spec_index: usize, metric: Metric) -> String {
    format!("spec{spec_index}_{metric}.model")
}

pub fn best_model_file(metric: Metric) -> String {
    format!("best_{metric}.model")
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct BestSpec {
    pub metric: Metric,
    pub spec_index: usize,
    pub test_mse: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// `test_mse[spec position][metric]`, `None` where training failed.
    pub test_mse: Vec<[Option<f64>; 3]>,
    pub best: Vec<BestSpec>,
    pub failures: Vec<(usize, Metric, String)>,
}

struct Job {
    spec_index: usize,
    spec: NetworkSpec,
    metric: Metric,
    seed: u64,
}

/// Trains one surrogate per (spec, metric) and writes model files, the MSE
/// and training-time tables, learning curves and test-split predictions of
/// the best model per metric.
pub fn train(cfg: &ExperimentConfig, data: &Path, spec_indices: &[usize], out_dir: &Path) -> Result<TrainOutcome> {
    let started = Instant::now();
    if spec_indices.is_empty() {
        return Err(ExperimentError::Config("no surrogate specs requested".into()));
    }
    let specs: Vec<NetworkSpec> = spec_indices
        .iter()
        .map(|&i| table1_spec(i).map_err(|e| ExperimentError::Config(e.to_string())))
        .collect::<Result<_>>()?;
    let records = load_csv(data)?;
    let data_split = split(&records, cfg.data.train_fraction, cfg.split_seed())?;
    let stats = NormalizationStats::fit(&data_split.train)?;

    let jobs: Vec<Job> = spec_indices
        .iter()
        .zip(&specs)
        .flat_map(|(&spec_index, spec)| {
            Metric::ALL.map(|metric| Job {
                spec_index,
                spec: spec.clone(),
                metric,
                seed: cfg.training_seed(spec_index, metric),
            })
        })
        .collect();
    let pool = worker_pool()?;
    let results: Vec<std::result::Result<(SurrogateModel, TrainingReport), String>> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                log::info!("training {} for {}", j.spec.label(), j.metric);
                fit_surrogate(&data_split, &stats, j.metric, &j.spec, &cfg.training_config(j.seed))
                    .map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut out = Outputs::new(out_dir)?;
    let mut test_mse = vec![[None; 3]; specs.len()];
    let mut failures = Vec::new();
    let mut times = String::from("spec,metric,epochs,seconds\n");
    let mut scatter = String::from("spec,total_nodes,depth,parameter_count,metric,test_mse,epochs\n");
    let mut models: Vec<[Option<SurrogateModel>; 3]> = vec![[None, None, None]; specs.len()];
    for (k, (job, res)) in jobs.iter().zip(results).enumerate() {
        let pos = k / 3;
        let m = job.metric.index();
        match res {
            Ok((model, rep)) => {
                out.write(&model_file(job.spec_index, job.metric), model.to_bytes()?)?;
                let mut curve = String::from("epoch,train_mse,test_mse\n");
                for (e, (tr, te)) in rep.mse_history.iter().enumerate() {
                    curve.push_str(&fmt_row([(e + 1).to_string(), tr.to_string(), te.to_string()]));
                }
                out.write(
                    &format!("learning_curves/spec{}_{}.csv", job.spec_index, job.metric),
                    curve,
                )?;
                let epochs = rep.mse_history.len();
                times.push_str(&fmt_row([
                    job.spec_index.to_string(),
                    job.metric.to_string(),
                    epochs.to_string(),
                    format!("{:.3}", rep.wall_time_seconds),
                ]));
                scatter.push_str(&fmt_row([
                    job.spec_index.to_string(),
                    job.spec.total_nodes().to_string(),
                    job.spec.depth().to_string(),
                    model.network.parameter_count().to_string(),
                    job.metric.to_string(),
                    rep.final_test_mse.to_string(),
                    epochs.to_string(),
                ]));
                test_mse[pos][m] = Some(rep.final_test_mse);
                models[pos][m] = Some(model);
            }
            Err(e) => {
                log::warn!("{} / {}: {e}", job.spec.label(), job.metric);
                failures.push((job.spec_index, job.metric, e));
            }
        }
    }

    // First spec wins ties.
    let mut best = Vec::new();
    let mut best_pos = [None; 3];
    for metric in Metric::ALL {
        let m = metric.index();
        let mut arg: Option<(usize, f64)> = None;
        for (pos, row) in test_mse.iter().enumerate() {
            if let Some(v) = row[m] {
                if arg.is_none_or(|(_, b)| v < b) {
                    arg = Some((pos, v));
                }
            }
        }
        if let Some((pos, v)) = arg {
            best_pos[m] = Some(pos);
            best.push(BestSpec {
                metric,
                spec_index: spec_indices[pos],
                test_mse: v,
            });
        }
    }

    let mut table = String::from("spec,widths,f1,f2,f3,best_f1,best_f2,best_f3\n");
    for (pos, (&idx, spec)) in spec_indices.iter().zip(&specs).enumerate() {
        let widths: Vec<String> = spec.hidden_widths.iter().map(|w| w.to_string()).collect();
        let mut cells = vec![idx.to_string(), widths.join(" ")];
        cells.extend(test_mse[pos].iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
        cells.extend(best_pos.iter().map(|b| u8::from(*b == Some(pos)).to_string()));
        table.push_str(&fmt_row(cells));
    }
    out.write(MSE_TABLE_FILE, table)?;
    out.write("training_times.csv", times)?;
    out.write("metrics_scatter.csv", scatter)?;
    let mut fail_csv = String::from("spec,metric,error\n");
    for (i, m, e) in &failures {
        fail_csv.push_str(&fmt_row([
            i.to_string(),
            m.to_string(),
            format!("\"{}\"", e.replace('"', "'")),
        ]));
    }
    out.write("training_failures.csv", fail_csv)?;
    out.write_json(BEST_SPECS_FILE, &best)?;

    for b in &best {
        let pos = best_pos[b.metric.index()].expect("best exists");
        let model = models[pos][b.metric.index()].as_ref().expect("trained");
        out.write(&best_model_file(b.metric), model.to_bytes()?)?;
        let mut pred = String::from("index,actual,predicted\n");
        for (i, r) in data_split.test.iter().enumerate() {
            let p = model.predict(&r.x)?;
            pred.push_str(&fmt_row([i.to_string(), r.metric(b.metric).to_string(), p.to_string()]));
        }
        out.write(&format!("predictions_{}.csv", b.metric), pred)?;
    }

    let mut seeds = BTreeMap::from([
        ("base_seed".to_string(), cfg.base_seed),
        ("split_seed".to_string(), cfg.split_seed()),
    ]);
    for j in &jobs {
        seeds.insert(format!("train/spec{}/{}", j.spec_index, j.metric), j.seed);
    }
    out.finish("train", seeds, started.elapsed().as_secs_f64())?;

    if let Some(metric) = Metric::ALL.into_iter().find(|m| best_pos[m.index()].is_none()) {
        return Err(ExperimentError::NoModel(metric));
    }
    Ok(TrainOutcome {
        test_mse,
        best,
        failures,
    })
}
