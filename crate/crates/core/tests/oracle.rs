use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surropt_core::dataset::{gen_dataset, synthetic_oracle, SyntheticOracle, SyntheticOracleConfig};

fn corners(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u32..(1 << n)).map(move |m| (0..n).map(|b| f64::from((m >> b) & 1)).collect())
}

#[test]
fn corner_minimum_of_f1_at_eight_dimensions() {
    for seed in [1, 2024, 77] {
        let cfg = SyntheticOracleConfig {
            seed,
            ..Default::default()
        };
        let oracle = SyntheticOracle::new(&cfg, 8).unwrap();

        let (best_x, best_f) = corners(8)
            .map(|x| {
                let f = oracle.evaluate(&x).unwrap().0;
                (x, f)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();

        // Independent evaluation through the expanded x'Qx + g'x + h form.
        let (q, g, h) = oracle.control_path.expanded();
        let quad = |x: &[f64]| {
            let mut v = h;
            for i in 0..8 {
                v += g[i] * x[i];
                for j in 0..8 {
                    v += x[i] * q[i][j] * x[j];
                }
            }
            v
        };
        let (ref_x, ref_f) = corners(8)
            .map(|x| {
                let f = quad(&x);
                (x, f)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(best_x, ref_x, "seed {seed}");
        assert!((best_f - ref_f).abs() <= 1e-12 * ref_f.abs().max(1.0));
    }
}

#[test]
fn outputs_are_smooth() {
    let cfg = SyntheticOracleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..25 {
        let x: Vec<f64> = (0..36).map(|_| 0.1 + 0.8 * rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..36).map(|_| rng.random::<f64>() - 0.5).collect();
        let at = |t: f64| {
            let p: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + t * b).collect();
            let (f1, f2, f3) = synthetic_oracle(&p, &cfg).unwrap();
            [f1, f2, f3]
        };
        // A kink would make central differences at two step sizes disagree.
        let slope = |h: f64, m: usize| (at(h)[m] - at(-h)[m]) / (2.0 * h);
        for m in 0..3 {
            let (d1, d2) = (slope(1e-3, m), slope(5e-4, m));
            assert!((d1 - d2).abs() <= 1e-4 * (1.0 + d1.abs()), "metric {m}: {d1} vs {d2}");
        }
    }
}

#[test]
fn generation_is_reproducible() {
    let cfg = SyntheticOracleConfig::default();
    let a = gen_dataset(50, &cfg).unwrap();
    let b = gen_dataset(50, &cfg).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn inductance_proxies_are_nonnegative(seed in any::<u64>(), xs in prop::collection::vec(0.0f64..=1.0, 36)) {
        let cfg = SyntheticOracleConfig { seed, ..Default::default() };
        let (f1, f2, f3) = synthetic_oracle(&xs, &cfg).unwrap();
        prop_assert!(f1 >= 0.0 && f2 >= 0.0);
        prop_assert!(f3.is_finite());
    }
}
