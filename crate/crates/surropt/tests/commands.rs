use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use proptest::prelude::*;
use surropt::commands::{self, parse_trace_name};
use surropt::ExperimentConfig;
use surropt_core::de::{read_trace_csv, trace_file_name, VariantId};

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig {
        base_seed: 11,
        variants: vec![VariantId::Derand, VariantId::Shade, VariantId::Obde],
        runs_per_variant: 3,
        budget: 300,
        surrogate_spec_indices: vec![1, 2],
        ..Default::default()
    };
    c.data.count = 300;
    c.training.max_epochs = 15;
    c
}

/// One small bundle shared by the tests below; none of them modify it.
fn bundle() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        commands::pipeline(&small_config(), d.path()).unwrap();
        d
    })
    .path()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn copy_dir(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for e in std::fs::read_dir(src).unwrap() {
        let e = e.unwrap();
        let to = dst.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &to);
        } else {
            std::fs::copy(e.path(), to).unwrap();
        }
    }
}

#[test]
fn gen_data_row_count_and_reproducibility() {
    let d = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let a = d.path().join("a/data.csv");
    let b = d.path().join("b/data.csv");
    commands::gen_data(&cfg, 2000, &a).unwrap();
    commands::gen_data(&cfg, 2000, &b).unwrap();
    assert_eq!(read(&a).lines().count(), 2001);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(d.path().join("a/data.meta.json").is_file());
    assert!(d.path().join("a/manifest.json").is_file());
}

#[test]
fn train_output_contract() {
    let models = bundle().join("models");
    for spec in [1, 2] {
        for m in ["f1", "f2", "f3"] {
            assert!(models.join(format!("spec{spec}_{m}.model")).is_file());
            assert!(models.join(format!("learning_curves/spec{spec}_{m}.csv")).is_file());
        }
    }
    let table = read(models.join("mse_table.csv"));
    let rows: Vec<Vec<String>> = table
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(
        rows[0],
        ["spec", "widths", "f1", "f2", "f3", "best_f1", "best_f2", "best_f3"]
    );
    assert_eq!(rows.len(), 3);
    for m in 0..3 {
        let mse: Vec<f64> = rows[1..].iter().map(|r| r[2 + m].parse().unwrap()).collect();
        let flags: Vec<&str> = rows[1..].iter().map(|r| r[5 + m].as_str()).collect();
        let argmin = if mse[1] < mse[0] { 1 } else { 0 };
        assert_eq!(flags.iter().filter(|f| **f == "1").count(), 1);
        assert_eq!(flags[argmin], "1");
        assert!(models.join(format!("best_f{}.model", m + 1)).is_file());
        let pred = read(models.join(format!("predictions_f{}.csv", m + 1)));
        assert_eq!(pred.lines().count(), 1 + 60);
    }
}

#[test]
fn optimize_output_contract() {
    let opt = bundle().join("optimize");
    let cfg = small_config();
    let traces: Vec<PathBuf> = std::fs::read_dir(opt.join("traces"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(traces.len(), 2 * 3 * 3);
    for t in &traces {
        let name = t.file_name().unwrap().to_str().unwrap();
        let (v, s, seed) = parse_trace_name(name).unwrap();
        let run = (0..3).find(|&r| cfg.run_seed(v, s, r) == seed);
        assert!(run.is_some(), "{name}");
        let values = read_trace_csv(t).unwrap();
        assert_eq!(values.len(), 300);
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }
    assert_eq!(read(opt.join("runs.csv")).lines().count(), 1 + 18);
    let layouts = read(opt.join("best_layouts.csv"));
    assert_eq!(layouts.lines().next().unwrap().split(',').count(), 8 + 36);
    for l in layouts.lines().skip(1) {
        let u: Vec<f64> = l.split(',').skip(8).map(|c| c.parse().unwrap()).collect();
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert_eq!(std::fs::read_dir(opt.join("aggregate")).unwrap().count(), 6);
}

#[test]
fn optimize_rerun_is_byte_identical() {
    let cfg = small_config();
    let d = tempfile::tempdir().unwrap();
    commands::optimize(&cfg, &bundle().join("models"), d.path()).unwrap();
    let a = bundle().join("optimize/traces");
    for e in std::fs::read_dir(&a).unwrap() {
        let e = e.unwrap();
        let other = d.path().join("traces").join(e.file_name());
        assert_eq!(std::fs::read(e.path()).unwrap(), std::fs::read(other).unwrap());
    }
    assert_eq!(
        read(bundle().join("optimize/runs.csv")),
        read(d.path().join("runs.csv"))
    );
}

#[test]
fn default_campaign_writes_two_hundred_traces() {
    let cfg = ExperimentConfig {
        budget: 20,
        ..Default::default()
    };
    let d = tempfile::tempdir().unwrap();
    let out = commands::optimize(&cfg, &bundle().join("models"), d.path()).unwrap();
    assert_eq!(out.runs.len(), 200);
    assert_eq!(std::fs::read_dir(d.path().join("traces")).unwrap().count(), 200);
}

#[test]
fn compare_matrices() {
    let cmp = bundle().join("compare");
    for s in [1, 2] {
        let p = read(cmp.join(format!("scenario{s}_pvalues.csv")));
        let rows: Vec<Vec<&str>> = p.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.len() == 4));
        let sig = read(cmp.join(format!("scenario{s}_significance.csv")));
        let sig: Vec<Vec<&str>> = sig.lines().map(|l| l.split(',').collect()).collect();
        for i in 1..4 {
            assert_eq!(sig[i][i], "0");
            assert!((1..4).all(|j| rows[i][j] == rows[j][i]));
        }
    }
    let d = tempfile::tempdir().unwrap();
    commands::compare(&small_config(), &bundle().join("optimize"), d.path()).unwrap();
    assert_eq!(read(cmp.join("summary.json")), read(d.path().join("summary.json")));
    assert_eq!(read(cmp.join("summary.csv")), read(d.path().join("summary.csv")));
}

#[test]
fn compare_needs_two_variants() {
    let d = tempfile::tempdir().unwrap();
    let traces = d.path().join("traces");
    std::fs::create_dir_all(&traces).unwrap();
    let src = bundle().join("optimize/traces");
    for e in std::fs::read_dir(&src).unwrap() {
        let e = e.unwrap();
        if e.file_name().to_str().unwrap().starts_with("SHADE_") {
            std::fs::copy(e.path(), traces.join(e.file_name())).unwrap();
        }
    }
    let err = commands::compare(&small_config(), d.path(), &d.path().join("out")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn complete_bundle_reports_no_warnings() {
    let d = tempfile::tempdir().unwrap();
    copy_dir(bundle(), d.path());
    let r = commands::report(d.path()).unwrap();
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    assert_eq!(r.base_seed, Some(11));
    assert_eq!(r.best_mse.len(), 3);
    assert_eq!(r.best_objective.len(), 2);
    assert_eq!(r.significance.len(), 2);
    let first = read(d.path().join("report.json"));
    commands::report(d.path()).unwrap();
    assert_eq!(first, read(d.path().join("report.json")));
    let m = surropt::manifest::Manifest::load(d.path()).unwrap();
    assert!(m.files.iter().any(|f| f.path == "report.json"));
    assert!(m.files.iter().any(|f| f.path.starts_with("optimize/traces/")));
    assert!(m.verify(d.path()).is_empty());
}

#[test]
fn deleted_trace_is_named_in_a_warning() {
    let d = tempfile::tempdir().unwrap();
    copy_dir(bundle(), d.path());
    let victim = std::fs::read_dir(d.path().join("optimize/traces"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap();
    let name = victim.file_name().into_string().unwrap();
    std::fs::remove_file(victim.path()).unwrap();
    let r = commands::report(d.path()).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert!(r.warnings[0].contains(&name), "{:?}", r.warnings);
    assert!(d.path().join("report.json").is_file());
}

proptest! {
    #[test]
    fn trace_names_round_trip(v in 0usize..10, s in 1u32..3, seed in any::<u64>()) {
        let v = VariantId::ALL[v];
        prop_assert_eq!(parse_trace_name(&trace_file_name(v, s, seed)), Some((v, s, seed)));
    }

    #[test]
    fn run_seeds_never_collide(base in any::<u64>()) {
        let cfg = ExperimentConfig { base_seed: base, ..Default::default() };
        let mut seeds: Vec<u64> = VariantId::ALL
            .iter()
            .flat_map(|&v| [1, 2].into_iter().flat_map(move |s| (0..10).map(move |r| (v, s, r))))
            .map(|(v, s, r)| cfg.run_seed(v, s, r))
            .collect();
        seeds.sort();
        let n = seeds.len();
        seeds.dedup();
        prop_assert_eq!(seeds.len(), n);
    }
}
