//! Checks for the acceptance criteria of the pipeline. Each check returns an
//! [`Outcome`]; the `acceptance` test target runs them in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surropt::commands;
use surropt::ExperimentConfig;
use surropt_core::dataset::{gen_dataset, split, Metric, NormalizationStats, SyntheticOracleConfig};
use surropt_core::de::{self, read_trace_csv, DEConfig, VariantId};
use surropt_core::objective::{FnObjective, SearchSpace};
use surropt_core::stats::{
    pairwise_comparison_matrix, wilcoxon_rank_sum, wilcoxon_rank_sum_using, Alternative, Method, RunSet,
};
use surropt_core::surrogate::{
    fit_surrogate, table1_spec, table1_specs, Activation, DenseNetwork, NetworkSpec, TrainingConfig,
};

/// Result of one criterion check.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
    /// Extra lines reported but not checked.
    pub notes: Vec<String>,
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ten reference architectures; the last has 10 layers and 7580 nodes.
pub fn table_fidelity() -> Outcome {
    let specs = table1_specs();
    let last = &specs[9];
    let pass = specs.len() == 10 && last.depth() == 10 && last.total_nodes() == 7580;
    Outcome {
        pass,
        detail: format!(
            "{} specs, spec 10 has {} layers / {} nodes",
            specs.len(),
            last.depth(),
            last.total_nodes()
        ),
        ..Default::default()
    }
}

/// Spec 3 on 2000 noise-free samples (80/20): median test MSE over three
/// training seeds at most 0.05 per metric, on z-scored targets.
pub fn surrogate_learning() -> Outcome {
    let oracle = SyntheticOracleConfig::default();
    let records = gen_dataset(2000, &oracle).unwrap();
    let data = split(&records, 0.8, 7).unwrap();
    let stats = NormalizationStats::fit(&data.train).unwrap();
    let spec = table1_spec(3).unwrap();
    let mut medians = Vec::new();
    for metric in Metric::ALL {
        let mse: Vec<f64> = [1u64, 2, 3]
            .iter()
            .map(|&seed| {
                let cfg = TrainingConfig {
                    seed,
                    ..Default::default()
                };
                fit_surrogate(&data, &stats, metric, &spec, &cfg)
                    .unwrap()
                    .1
                    .final_test_mse
            })
            .collect();
        medians.push((metric, median(mse)));
    }
    let pass = medians.iter().all(|(_, m)| *m <= 0.05);
    let detail = medians
        .iter()
        .map(|(m, v)| format!("{m} {v:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        pass,
        detail: format!("median test MSE {detail}; limit 0.05"),
        ..Default::default()
    }
}

/// Smallest |pre-activation| of any ReLU unit over the batch.
pub fn kink_margin(net: &DenseNetwork, x: &Array2<f64>) -> f64 {
    let mut a = x.clone();
    let mut margin = f64::INFINITY;
    for l in net.layers() {
        let z = a.dot(&l.weights) + &l.bias;
        if l.activation == Activation::Relu {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            a = z.mapv(|v| v.max(0.0));
        } else {
            a = z;
        }
    }
    margin
}

/// Analytic gradients against central differences on 20 networks with at
/// most 50 parameters, relative error at most 1e-4.
pub fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 20 {
        let input_dim = rng.random_range(1..=4);
        let widths: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(1..=5)).collect();
        let net = DenseNetwork::build(&NetworkSpec::custom(widths).unwrap(), input_dim, rng.random()).unwrap();
        let x = Array2::from_shape_fn((3, input_dim), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
        if net.parameter_count() > 50 || kink_margin(&net, &x) <= 1e-3 {
            continue;
        }
        cases += 1;
        let analytic = net.loss_and_gradient(x.view(), y.view()).1.flatten();
        let params = net.parameters();
        for k in 0..params.len() {
            let loss_at = |d: f64| {
                let mut p = params.clone();
                p[k] += d;
                let mut probe = net.clone();
                probe.set_parameters(&p).unwrap();
                probe.loss_and_gradient(x.view(), y.view()).0
            };
            let numeric = (loss_at(step) - loss_at(-step)) / (2.0 * step);
            let scale = analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic[k] - numeric).abs() / scale);
        }
    }
    Outcome {
        pass: worst <= 1e-4,
        detail: format!("20 networks, worst relative error {worst:.2e}; limit 1e-4"),
        ..Default::default()
    }
}

/// Every variant on the 10-D sphere over [-5, 5]: pop 10, 3000 evaluations,
/// 10 seeds. Median final best at most 1e-2, traces nonincreasing.
pub fn de_sanity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for v in VariantId::ALL {
        let mut finals = Vec::new();
        let mut monotone = true;
        for seed in 0..10 {
            let space = SearchSpace::uniform(10, -5.0, 5.0).unwrap();
            let mut obj = FnObjective::new(space, |x: &[f64]| x.iter().map(|a| a * a).sum());
            let cfg = DEConfig {
                max_evals: 3000,
                seed,
                ..Default::default()
            };
            let t = de::run(v, &mut obj, &cfg).unwrap();
            monotone &= t.best_so_far.len() == 3000 && t.best_so_far.windows(2).all(|w| w[1] <= w[0]);
            finals.push(t.final_best());
        }
        let m = median(finals);
        pass &= monotone && m <= 1e-2;
        parts.push(format!("{v} {m:.1e}{}", if monotone { "" } else { " non-monotone" }));
    }
    Outcome {
        pass,
        detail: format!("median final best: {}", parts.join(", ")),
        ..Default::default()
    }
}

/// Two-sided rank-sum p-value by listing every rank assignment.
pub fn enumerated_p(n1: usize, n2: usize, w: u64) -> f64 {
    let n = n1 + n2;
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let s: u64 = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| b as u64 + 1).sum();
        total += 1;
        le += u64::from(s <= w);
        ge += u64::from(s >= w);
    }
    ((2 * le.min(ge)) as f64 / total as f64).min(1.0)
}

/// Exact p-values against full enumeration for all sizes up to 7 x 7, and
/// the worked case {1,2,3} vs {4,5,6}.
pub fn wilcoxon_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut checked = 0;
    for n1 in 1..=7 {
        for n2 in 1..=7 {
            for _ in 0..5 {
                let mut pool: Vec<f64> = (0..n1 + n2).map(|k| k as f64).collect();
                pool.shuffle(&mut rng);
                let b = pool.split_off(n1);
                let w: u64 = pool.iter().map(|&v| v as u64 + 1).sum();
                let r = wilcoxon_rank_sum_using(&pool, &b, Alternative::TwoSided, Method::Exact).unwrap();
                checked += 1;
                if r.p_value != enumerated_p(n1, n2, w) || r.statistic != w as f64 {
                    mismatches += 1;
                }
            }
        }
    }
    let worked = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    Outcome {
        pass: mismatches == 0 && worked.p_value == 0.1 && worked.method == Method::Exact,
        detail: format!(
            "{mismatches} mismatches in {checked} cases up to 7x7; worked case p = {}",
            worked.p_value
        ),
        ..Default::default()
    }
}

/// Default campaign, with the surrogate sweep limited to specs 1-3.
pub fn desk_config() -> ExperimentConfig {
    ExperimentConfig {
        surrogate_spec_indices: vec![1, 2, 3],
        ..Default::default()
    }
}

fn read_column(path: &Path, col: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

/// Mean best-so-far gain from evaluation 300 to 1000 at most a quarter of
/// the gain from 10 to 300, per variant and scenario.
pub fn plateau(bundle: &Path, cfg: &ExperimentConfig) -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut failing = Vec::new();
    for &s in &cfg.scenario_ids {
        for &v in &cfg.variants {
            let mean = read_column(&bundle.join(format!("optimize/aggregate/{v}_{s}.csv")), 1);
            let early = mean[9] - mean[299];
            let late = mean[299] - mean[999];
            let ratio = if early > 0.0 { late / early } else { f64::INFINITY };
            if ratio > worst.0 {
                worst = (ratio, format!("{v} scenario {s}"));
            }
            if ratio > 0.25 {
                failing.push(format!("{v}/{s} {ratio:.3}"));
            }
        }
    }
    Outcome {
        pass: failing.is_empty(),
        detail: if failing.is_empty() {
            format!("worst late/early ratio {:.3} ({}); limit 0.25", worst.0, worst.1)
        } else {
            format!("late/early ratio above 0.25 for {}", failing.join(", "))
        },
        ..Default::default()
    }
}

/// Files whose bytes depend on wall-clock time.
fn timing_file(rel: &str) -> bool {
    rel.ends_with("manifest.json") || rel.ends_with("training_times.csv")
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Two bundles from the same seed agree byte for byte, except files that
/// record wall-clock time.
pub fn determinism(a: &Path, b: &Path) -> Outcome {
    let fa = files(a);
    let fb = files(b);
    let mut differing = Vec::new();
    let mut compared = 0;
    for rel in &fa {
        let name = rel.to_string_lossy();
        if timing_file(&name) {
            continue;
        }
        compared += 1;
        if std::fs::read(a.join(rel)).ok() != std::fs::read(b.join(rel)).ok() {
            differing.push(name.into_owned());
        }
    }
    let traces = fa.iter().filter(|p| p.starts_with("optimize/traces")).count();
    Outcome {
        pass: fa == fb && differing.is_empty() && traces == 200,
        detail: format!(
            "{compared} files compared ({traces} traces), {} differ{}",
            differing.len(),
            if fa == fb { "" } else { ", file lists differ" }
        ),
        ..Default::default()
    }
}

/// Matrix shape, symmetry, diagonal and mask, plus win/loss counts
/// recomputed from the raw traces. The ordering is returned as notes.
pub fn comparison_machinery(bundle: &Path, cfg: &ExperimentConfig) -> Outcome {
    let mut problems = Vec::new();
    let mut orderings = Vec::new();
    let traces_dir = bundle.join("optimize/traces");
    for &s in &cfg.scenario_ids {
        let grid = |name: &str| -> Vec<Vec<String>> {
            std::fs::read_to_string(bundle.join(format!("compare/scenario{s}_{name}.csv")))
                .unwrap()
                .lines()
                .map(|l| l.split(',').map(String::from).collect())
                .collect()
        };
        let p = grid("pvalues");
        let sig = grid("significance");
        if p.len() != 11 || p.iter().any(|r| r.len() != 11) {
            problems.push(format!("scenario {s}: p-value matrix is not 10x10"));
            continue;
        }
        for i in 1..=10 {
            if sig[i][i] != "0" {
                problems.push(format!("scenario {s}: significant diagonal at {}", p[i][0]));
            }
            for j in 1..=10 {
                if p[i][j] != p[j][i] {
                    problems.push(format!("scenario {s}: asymmetric p at {},{}", p[i][0], p[0][j]));
                }
                let pv: f64 = p[i][j].parse().unwrap();
                if (sig[i][j] == "1") != (pv < 0.05) {
                    problems.push(format!("scenario {s}: mask disagrees at {},{}", p[i][0], p[0][j]));
                }
            }
        }

        // Independent count of wins and losses from the raw traces.
        let mut by_variant: BTreeMap<VariantId, Vec<(u64, Vec<f64>)>> = BTreeMap::new();
        for e in std::fs::read_dir(&traces_dir).unwrap() {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_str().unwrap().to_string();
            let (v, sc, seed) = commands::parse_trace_name(&name).unwrap();
            if sc == s {
                by_variant
                    .entry(v)
                    .or_default()
                    .push((seed, read_trace_csv(&path).unwrap()));
            }
        }
        let finals: BTreeMap<VariantId, Vec<f64>> = by_variant
            .into_iter()
            .map(|(v, runs)| (v, runs.into_iter().map(|(_, t)| *t.last().unwrap()).collect()))
            .collect();
        let mut expected: BTreeMap<VariantId, (usize, usize)> = BTreeMap::new();
        for (vi, a) in &finals {
            for (vj, b) in &finals {
                if vi == vj {
                    continue;
                }
                let r = wilcoxon_rank_sum(a, b).unwrap();
                let n_a = a.len() as f64;
                let n = (a.len() + b.len()) as f64;
                if r.significant_at_5pct && r.statistic < n_a * (n + 1.0) / 2.0 {
                    expected.entry(*vi).or_default().0 += 1;
                    expected.entry(*vj).or_default().1 += 1;
                }
            }
        }
        let summary = std::fs::read_to_string(bundle.join("compare/summary.csv")).unwrap();
        let mut order = Vec::new();
        for row in summary.lines().skip(1) {
            let c: Vec<&str> = row.split(',').collect();
            if c[0] != s.to_string() {
                continue;
            }
            let v: VariantId = c[2].parse().unwrap();
            let got = (c[3].parse::<usize>().unwrap(), c[4].parse::<usize>().unwrap());
            if got != expected.get(&v).copied().unwrap_or_default() {
                problems.push(format!("scenario {s}: {v} counts {got:?} vs {:?}", expected.get(&v)));
            }
            order.push(format!("{v}({}/{})", got.0, got.1));
        }
        let runsets: Vec<RunSet> = finals
            .iter()
            .map(|(v, f)| RunSet::new(*v, s, f.iter().map(|x| vec![*x]).collect()).unwrap())
            .collect();
        let never = pairwise_comparison_matrix(&runsets, None).unwrap().never_outperformed();
        orderings.push(format!(
            "scenario {s}: {} | never outperformed: {}",
            order.join(" "),
            never.iter().map(|v| v.name()).collect::<Vec<_>>().join(" ")
        ));
    }
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "10x10 per scenario, symmetric, diagonal not significant, counts match".into()
        } else {
            problems.join("; ")
        },
        notes: orderings,
    }
}
