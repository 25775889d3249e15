use proptest::prelude::*;
use surropt_core::de::{run, DEConfig, VariantId};
use surropt_core::objective::{FnObjective, Objective, ObjectiveError, SearchSpace};

/// Records every point it is asked to evaluate.
struct Recording<F> {
    inner: FnObjective<F>,
    seen: Vec<Vec<f64>>,
}

impl<F: FnMut(&[f64]) -> f64> Objective for Recording<F> {
    fn space(&self) -> &SearchSpace {
        self.inner.space()
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.seen.push(x.to_vec());
        self.inner.evaluate(x)
    }

    fn evaluations(&self) -> u64 {
        self.inner.evaluations()
    }
}

fn ellipsoid(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, v)| (1.0 + i as f64) * (v - 0.3).powi(2))
        .sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn every_variant_respects_budget_bounds_and_elitism() {
    for variant in VariantId::ALL {
        for seed in [0, 7] {
            let space = SearchSpace::new(vec![-2.0, 0.0, -1.0, 3.0], vec![1.0, 0.5, 4.0, 3.5]).unwrap();
            let mut obj = Recording {
                inner: FnObjective::new(space.clone(), ellipsoid),
                seen: Vec::new(),
            };
            let cfg = DEConfig {
                max_evals: 437,
                seed,
                ..Default::default()
            };
            let trace = run(variant, &mut obj, &cfg).unwrap();
            assert_eq!(trace.best_so_far.len(), 437, "{variant}");
            assert_eq!(obj.evaluations(), 437, "{variant}");
            assert!(obj.seen.iter().all(|x| space.contains(x)), "{variant}");
            assert!(trace.best_so_far.windows(2).all(|w| w[1] <= w[0]), "{variant}");
            assert!(space.contains(&trace.best_x));
            assert_eq!(ellipsoid(&trace.best_x), trace.final_best());
            assert_eq!(trace.variant, variant);
        }
    }
}

#[test]
fn weak_progress_on_a_convex_quadratic() {
    for variant in VariantId::ALL {
        let mut initial = Vec::new();
        let mut last = Vec::new();
        for seed in 0..10 {
            let mut obj = FnObjective::new(SearchSpace::uniform(5, -1.0, 1.0).unwrap(), ellipsoid);
            let cfg = DEConfig {
                max_evals: 1000,
                seed,
                ..Default::default()
            };
            let t = run(variant, &mut obj, &cfg).unwrap();
            initial.push(t.best_so_far[cfg.pop_size - 1]);
            last.push(t.final_best());
        }
        let (m0, m1) = (median(initial), median(last));
        assert!(m1 * 10.0 <= m0, "{variant}: {m0} -> {m1}");
    }
}

#[test]
fn errors_propagate() {
    let mut obj = FnObjective::new(SearchSpace::unit(3), |_: &[f64]| f64::NAN);
    assert!(run(VariantId::Derand, &mut obj, &DEConfig::default()).is_err());
    let mut ok = FnObjective::new(SearchSpace::unit(3), ellipsoid);
    let bad = DEConfig {
        crossover_prob: 1.5,
        ..Default::default()
    };
    assert!(run(VariantId::Jade, &mut ok, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_deterministic_and_monotone(v in 0usize..10, seed in any::<u64>(), budget in 10usize..200) {
        let variant = VariantId::ALL[v];
        let cfg = DEConfig { max_evals: budget, seed, ..Default::default() };
        let mut a = FnObjective::new(SearchSpace::unit(6), ellipsoid);
        let mut b = FnObjective::new(SearchSpace::unit(6), ellipsoid);
        let ta = run(variant, &mut a, &cfg).unwrap();
        let tb = run(variant, &mut b, &cfg).unwrap();
        let bits = |t: &[f64]| t.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&ta.best_so_far), bits(&tb.best_so_far));
        prop_assert_eq!(ta.best_so_far.len(), budget);
        prop_assert!(ta.best_so_far.windows(2).all(|w| w[1] <= w[0]));
    }
}
