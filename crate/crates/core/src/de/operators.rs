//! Classic DE building blocks: rand/1 and best/1 mutation, binomial
//! crossover, greedy selection and opposition.

use rand::Rng;

use super::{best_index, DeError, Individual};
use crate::objective::SearchSpace;
use crate::rng::Rng64;

/// `base + f (a - b)`.
pub fn rand1_donor(base: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    base.iter()
        .zip(a.iter().zip(b))
        .map(|(&x, (&p, &q))| x + f * (p - q))
        .collect()
}

/// Same arithmetic as [`rand1_donor`] with the best individual as base.
pub fn best1_donor(best: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    rand1_donor(best, a, b, f)
}

/// `k` distinct indices in `0..n`, none of them in `exclude`.
pub(crate) fn sample_distinct(rng: &mut Rng64, n: usize, exclude: &[usize], k: usize) -> Result<Vec<usize>, DeError> {
    let allowed = (0..n).filter(|i| !exclude.contains(i)).count();
    if allowed < k {
        return Err(DeError::InsufficientPopulation {
            needed: k + exclude.len(),
            got: n,
        });
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let r = rng.random_range(0..n);
        if !exclude.contains(&r) && !out.contains(&r) {
            out.push(r);
        }
    }
    Ok(out)
}

/// DE/rand/1: `x_r1 + F (x_r2 - x_r3)` with r1, r2, r3 distinct and not the
/// target.
pub fn mutate_rand1(pop: &[Individual], target: usize, f: f64, rng: &mut Rng64) -> Result<Vec<f64>, DeError> {
    if pop.len() < 4 {
        return Err(DeError::InsufficientPopulation {
            needed: 4,
            got: pop.len(),
        });
    }
    let r = sample_distinct(rng, pop.len(), &[target], 3)?;
    Ok(rand1_donor(&pop[r[0]].x, &pop[r[1]].x, &pop[r[2]].x, f))
}

/// DE/best/1: `x_best + F (x_r1 - x_r2)` with r1 != r2, both not the target.
pub fn mutate_best1(pop: &[Individual], target: usize, f: f64, rng: &mut Rng64) -> Result<Vec<f64>, DeError> {
    if pop.len() < 4 {
        return Err(DeError::InsufficientPopulation {
            needed: 4,
            got: pop.len(),
        });
    }
    let best = best_index(pop);
    let r = sample_distinct(rng, pop.len(), &[target], 2)?;
    Ok(best1_donor(&pop[best].x, &pop[r[0]].x, &pop[r[1]].x, f))
}

/// Takes the donor coordinate where `u_j < cr` or `j == j_rand`.
pub fn crossover_binomial(target: &[f64], donor: &[f64], cr: f64, rng: &mut Rng64) -> Result<Vec<f64>, DeError> {
    if target.len() != donor.len() {
        return Err(DeError::DimensionMismatch {
            expected: target.len(),
            actual: donor.len(),
        });
    }
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let j_rand = rng.random_range(0..target.len());
    Ok(target
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(j, (&t, &d))| {
            let u: f64 = rng.random();
            if u < cr || j == j_rand {
                d
            } else {
                t
            }
        })
        .collect())
}

/// Survivor of target vs trial; ties go to the trial.
pub fn select_greedy(target: &Individual, trial: &Individual) -> Result<Individual, DeError> {
    if !target.evaluated || !trial.evaluated {
        return Err(DeError::Unevaluated);
    }
    Ok(if trial.fitness <= target.fitness {
        trial.clone()
    } else {
        target.clone()
    })
}

/// `lower + upper - x`.
pub fn opposition_point(space: &SearchSpace, x: &[f64]) -> Result<Vec<f64>, DeError> {
    space.check(x)?;
    Ok(reflect(x, space.lower(), space.upper()))
}

pub(crate) fn reflect(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| lo + hi - v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn ind(x: Vec<f64>, f: f64) -> Individual {
        Individual::with_fitness(x, f)
    }

    #[test]
    fn rand1_formula() {
        assert_eq!(rand1_donor(&[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], 0.7), vec![0.7, 0.7]);
        assert_eq!(rand1_donor(&[0.2, 0.4], &[3.0, 1.0], &[3.0, 1.0], 0.7), vec![0.2, 0.4]);
        assert_eq!(rand1_donor(&[0.2, 0.4], &[3.0, 1.0], &[0.0, 0.0], 0.0), vec![0.2, 0.4]);
    }

    #[test]
    fn rand1_uses_distinct_non_target_donors() {
        // Distinct coordinates let the donor reveal which members were used.
        let pop: Vec<Individual> = (0..5).map(|i| ind(vec![10f64.powi(i)], 0.0)).collect();
        let mut rng = stream(3, 0);
        for _ in 0..200 {
            let v = mutate_rand1(&pop, 2, 1.0, &mut rng).unwrap()[0];
            let found = (0..5)
                .flat_map(|a| (0..5).flat_map(move |b| (0..5).map(move |c| (a, b, c))))
                .any(|(a, b, c)| {
                    a != b && b != c && a != c && ![a, b, c].contains(&2) && {
                        let e = 10f64.powi(a) + 10f64.powi(b) - 10f64.powi(c);
                        (e - v).abs() < 1e-9
                    }
                });
            assert!(found, "donor {v} not explained by distinct non-target indices");
        }
        assert!(mutate_rand1(&pop[..3], 0, 0.7, &mut rng).is_err());
    }

    #[test]
    fn best1_cases() {
        let mut rng = stream(1, 0);
        let same = vec![ind(vec![2.0, 2.0], 1.0); 4];
        assert_eq!(mutate_best1(&same, 0, 0.7, &mut rng).unwrap(), vec![2.0, 2.0]);

        let pop = vec![
            ind(vec![1.0, 1.0], 0.0),
            ind(vec![5.0, 0.0], 3.0),
            ind(vec![9.0, 7.0], 2.0),
            ind(vec![-4.0, 3.0], 4.0),
        ];
        assert_eq!(mutate_best1(&pop, 1, 0.0, &mut rng).unwrap(), vec![1.0, 1.0]);
        assert_eq!(best1_donor(&[1.0, 1.0], &[3.0, 3.0], &[3.0, 3.0], 0.7), vec![1.0, 1.0]);
        assert!(mutate_best1(&pop[..3], 1, 0.7, &mut rng).is_err());
    }

    #[test]
    fn crossover_extremes() {
        let mut rng = stream(5, 0);
        let t = vec![0.0; 6];
        let d = vec![1.0; 6];
        assert_eq!(crossover_binomial(&t, &d, 1.0, &mut rng).unwrap(), d);
        let trial = crossover_binomial(&t, &d, 0.0, &mut rng).unwrap();
        assert_eq!(trial.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(crossover_binomial(&t, &t, 0.5, &mut rng).unwrap(), t);
        assert!(crossover_binomial(&t, &d[..3], 0.5, &mut rng).is_err());
    }

    #[test]
    fn greedy_cases() {
        let a = ind(vec![0.0], 2.0);
        let b = ind(vec![1.0], 1.0);
        assert_eq!(select_greedy(&a, &b).unwrap(), b);
        assert_eq!(select_greedy(&b, &a).unwrap(), b);
        let tie = ind(vec![5.0], 2.0);
        assert_eq!(select_greedy(&a, &tie).unwrap(), tie);
        assert!(matches!(
            select_greedy(&a, &Individual::new(vec![0.0])),
            Err(DeError::Unevaluated)
        ));
    }

    #[test]
    fn opposition_cases() {
        let s = SearchSpace::unit(2);
        let o = opposition_point(&s, &[0.3, 0.5]).unwrap();
        assert!((o[0] - 0.7).abs() < 1e-15);
        assert_eq!(o[1], 0.5);
        assert!(opposition_point(&s, &[1.2, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn opposition_is_an_involution(
            bounds in prop::collection::vec((-10.0f64..0.0, 0.1f64..10.0), 1..8),
            ts in prop::collection::vec(0.0f64..=1.0, 8),
        ) {
            let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
            let upper: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
            let space = SearchSpace::new(lower.clone(), upper.clone()).unwrap();
            let x: Vec<f64> = lower.iter().zip(&upper).zip(&ts).map(|((l, u), t)| l + t * (u - l)).collect();
            let o = opposition_point(&space, &x).unwrap();
            prop_assert!(space.contains(&o));
            let back = opposition_point(&space, &o).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn crossover_forced_index_rule(seed in any::<u64>(), dim in 1usize..20, cr in 0.0f64..=1.0) {
            let t = vec![0.0; dim];
            let d = vec![1.0; dim];
            let trial = crossover_binomial(&t, &d, cr, &mut stream(seed, 0)).unwrap();
            let from_donor = trial.iter().filter(|&&v| v == 1.0).count();
            prop_assert!(from_donor >= 1);
            prop_assert!(trial.iter().all(|&v| v == 0.0 || v == 1.0));
            if cr == 0.0 {
                prop_assert_eq!(from_donor, 1);
            }
        }

        #[test]
        fn selection_favors_trial_on_ties(ft in -1e6f64..1e6, delta in -1e3f64..1e3) {
            let target = ind(vec![0.0], ft);
            let trial = ind(vec![1.0], ft + delta);
            let s = select_greedy(&target, &trial).unwrap();
            prop_assert_eq!(s.x[0] == 1.0, ft + delta <= ft);
            let tie = select_greedy(&target, &ind(vec![1.0], ft)).unwrap();
            prop_assert_eq!(tie.x[0], 1.0);
        }
    }
}
