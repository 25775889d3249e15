//! Parameter-adaptive DE: the JADE current-to-pbest/1 mutation with an
//! external archive, JADE's running means and SHADE's success-history memory.

use rand::Rng;
use rand_distr::StandardNormal;

use super::operators::sample_distinct;
use super::{ranked_indices, DeError, Individual};
use crate::rng::Rng64;

/// Spread of the Cauchy (F) and normal (CR) samplers in both JADE and SHADE.
const F_SCALE: f64 = 0.1;
const CR_SD: f64 = 0.1;

/// Cauchy(loc, scale) draw, redrawn while ≤ 0 and truncated to 1.
pub(crate) fn sample_f(loc: f64, scale: f64, rng: &mut Rng64) -> f64 {
    if scale == 0.0 {
        return loc.clamp(f64::MIN_POSITIVE, 1.0);
    }
    for _ in 0..10_000 {
        let u: f64 = rng.random();
        let f = loc + scale * (std::f64::consts::PI * (u - 0.5)).tan();
        if f > 0.0 {
            return f.min(1.0);
        }
    }
    // Only reachable when loc sits far below zero.
    f64::MIN_POSITIVE
}

/// Normal(mean, sd) draw clipped to [0, 1].
pub(crate) fn sample_cr(mean: f64, sd: f64, rng: &mut Rng64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (mean + sd * z).clamp(0.0, 1.0)
}

/// Weighted Lehmer mean `Σ w v² / Σ w v`.
pub fn lehmer_mean(values: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = values.iter().zip(weights).map(|(v, w)| w * v * v).sum();
    let den: f64 = values.iter().zip(weights).map(|(v, w)| w * v).sum();
    num / den
}

/// Success-history memory of F and CR location parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadeMemory {
    pub m_f: Vec<f64>,
    pub m_cr: Vec<f64>,
    pos: usize,
}

impl ShadeMemory {
    pub fn new(size: usize, init: f64) -> Result<Self, DeError> {
        if size == 0 {
            return Err(DeError::InvalidConfig("SHADE memory size must be ≥ 1".into()));
        }
        Ok(Self {
            m_f: vec![init; size],
            m_cr: vec![init; size],
            pos: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.m_f.len()
    }

    /// Cell that the next successful update overwrites.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// `(F_i, CR_i)` around one randomly chosen cell.
    pub fn sample_params(&self, rng: &mut Rng64) -> (f64, f64) {
        self.sample_params_with_spread(rng, F_SCALE, CR_SD)
    }

    pub fn sample_params_with_spread(&self, rng: &mut Rng64, f_scale: f64, cr_sd: f64) -> (f64, f64) {
        let r = rng.random_range(0..self.size());
        let cr = sample_cr(self.m_cr[r], cr_sd, rng);
        let f = sample_f(self.m_f[r], f_scale, rng);
        (f, cr)
    }

    /// Writes the improvement-weighted means of one generation's successes
    /// into the current cell and advances the pointer. No-op without
    /// successes.
    pub fn update(&mut self, s_f: &[f64], s_cr: &[f64], improvements: &[f64]) -> Result<(), DeError> {
        if s_f.len() != s_cr.len() || s_f.len() != improvements.len() {
            return Err(DeError::InvalidArgument(format!(
                "success lists differ in length: {} F, {} CR, {} improvements",
                s_f.len(),
                s_cr.len(),
                improvements.len()
            )));
        }
        if s_f.is_empty() {
            return Ok(());
        }
        let total: f64 = improvements.iter().sum();
        let weights: Vec<f64> = if total > 0.0 {
            improvements.iter().map(|d| d / total).collect()
        } else {
            vec![1.0 / s_f.len() as f64; s_f.len()]
        };
        self.m_f[self.pos] = lehmer_mean(s_f, &weights);
        self.m_cr[self.pos] = s_cr.iter().zip(&weights).map(|(c, w)| c * w).sum();
        self.pos = (self.pos + 1) % self.size();
        Ok(())
    }
}

/// Running means of F and CR with learning rate `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct JadeState {
    pub mu_f: f64,
    pub mu_cr: f64,
    pub c: f64,
}

impl JadeState {
    pub fn new(c: f64) -> Self {
        Self {
            mu_f: 0.5,
            mu_cr: 0.5,
            c,
        }
    }

    pub fn sample_params(&self, rng: &mut Rng64) -> (f64, f64) {
        let cr = sample_cr(self.mu_cr, CR_SD, rng);
        let f = sample_f(self.mu_f, F_SCALE, rng);
        (f, cr)
    }

    pub fn update(&mut self, s_f: &[f64], s_cr: &[f64]) {
        if s_f.is_empty() {
            return;
        }
        let n = s_cr.len() as f64;
        self.mu_cr = (1.0 - self.c) * self.mu_cr + self.c * s_cr.iter().sum::<f64>() / n;
        self.mu_f = (1.0 - self.c) * self.mu_f + self.c * lehmer_mean(s_f, &vec![1.0; s_f.len()]);
    }
}

/// Bounded store of replaced parents; random eviction once full.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    pub members: Vec<Vec<f64>>,
    pub capacity: usize,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self {
            members: Vec::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn push(&mut self, x: Vec<f64>, rng: &mut Rng64) {
        if self.capacity == 0 {
            return;
        }
        self.members.push(x);
        while self.members.len() > self.capacity {
            let k = rng.random_range(0..self.members.len());
            self.members.swap_remove(k);
        }
    }
}

/// Indices of the `ceil(p N)` best individuals (at least one).
pub fn pbest_candidates(pop: &[Individual], p: f64) -> Vec<usize> {
    let k = ((p * pop.len() as f64).ceil() as usize).clamp(1, pop.len().max(1));
    ranked_indices(pop).into_iter().take(k).collect()
}

/// current-to-pbest/1: `x_i + F (x_pbest - x_i) + F (x_r1 - x~_r2)` where
/// `x~_r2` comes from the population or the archive.
pub fn jade_mutation(
    pop: &[Individual],
    archive: &[Vec<f64>],
    target: usize,
    f: f64,
    p: f64,
    rng: &mut Rng64,
) -> Result<Vec<f64>, DeError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DeError::InvalidArgument(format!("p = {p} outside (0, 1]")));
    }
    if target >= pop.len() {
        return Err(DeError::InvalidArgument(format!("target {target} out of range")));
    }
    let candidates = pbest_candidates(pop, p);
    let pbest = candidates[rng.random_range(0..candidates.len())];
    let r1 = sample_distinct(rng, pop.len(), &[target], 1)?[0];
    let r2 = sample_distinct(rng, pop.len() + archive.len(), &[target, r1], 1)?[0];
    let x2 = if r2 < pop.len() {
        &pop[r2].x
    } else {
        &archive[r2 - pop.len()]
    };
    let xi = &pop[target].x;
    Ok((0..xi.len())
        .map(|j| xi[j] + f * (pop[pbest].x[j] - xi[j]) + f * (pop[r1].x[j] - x2[j]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn lehmer_examples() {
        let mut m = ShadeMemory::new(3, 0.5).unwrap();
        m.update(&[0.5], &[0.9], &[1.0]).unwrap();
        assert_eq!(m.m_f[0], 0.5);
        assert_eq!(m.m_cr[0], 0.9);
        m.update(&[0.2, 0.8], &[0.1, 0.3], &[2.0, 2.0]).unwrap();
        // (0.2² + 0.8²) / (0.2 + 0.8)
        assert!((m.m_f[1] - 0.68).abs() < 1e-12);
        assert!((m.m_cr[1] - 0.2).abs() < 1e-12);
        assert_eq!(m.position(), 2);
    }

    #[test]
    fn empty_success_leaves_memory() {
        let mut m = ShadeMemory::new(4, 0.5).unwrap();
        let before = m.clone();
        m.update(&[], &[], &[]).unwrap();
        assert_eq!(m, before);
        assert!(m.update(&[0.1], &[], &[1.0]).is_err());
    }

    #[test]
    fn pointer_wraps() {
        let mut m = ShadeMemory::new(2, 0.5).unwrap();
        for k in 0..5 {
            m.update(&[0.1 * (k + 1) as f64], &[0.0], &[1.0]).unwrap();
        }
        assert_eq!(m.position(), 1);
        assert!((m.m_f[0] - 0.5).abs() < 1e-12);
        assert!((m.m_f[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn improvement_weights() {
        let mut m = ShadeMemory::new(1, 0.5).unwrap();
        m.update(&[0.2, 0.8], &[0.0, 1.0], &[3.0, 1.0]).unwrap();
        let w = [0.75, 0.25];
        let oracle = (w[0] * 0.04 + w[1] * 0.64) / (w[0] * 0.2 + w[1] * 0.8);
        assert!((m.m_f[0] - oracle).abs() < 1e-12);
        assert!((m.m_cr[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spread_returns_the_cell() {
        let m = ShadeMemory::new(10, 0.5).unwrap();
        let mut rng = stream(0, 0);
        assert_eq!(m.sample_params_with_spread(&mut rng, 0.0, 0.0), (0.5, 0.5));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = ShadeMemory::new(10, 0.5).unwrap();
        let a: Vec<_> = {
            let mut r = stream(9, 0);
            (0..20).map(|_| m.sample_params(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = stream(9, 0);
            (0..20).map(|_| m.sample_params(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn jade_means_move_toward_successes() {
        let mut s = JadeState::new(0.1);
        s.update(&[0.9], &[0.9]);
        assert!((s.mu_f - 0.54).abs() < 1e-12);
        assert!((s.mu_cr - 0.54).abs() < 1e-12);
        s.update(&[], &[]);
        assert!((s.mu_f - 0.54).abs() < 1e-12);
    }

    fn pop(values: &[(f64, f64)]) -> Vec<Individual> {
        values
            .iter()
            .map(|&(x, f)| Individual::with_fitness(vec![x], f))
            .collect()
    }

    #[test]
    fn pbest_single_best() {
        let p = pop(&[(0.0, 3.0), (1.0, 1.0), (2.0, 2.0), (3.0, 5.0)]);
        assert_eq!(pbest_candidates(&p, 0.25), vec![1]);
        assert_eq!(pbest_candidates(&p, 0.5), vec![1, 2]);
        // F = 1, x_r1 - x~_r2 cancels only via pbest; with one candidate the
        // pbest term contributes x_best - x_i exactly.
        let mut rng = stream(2, 0);
        for _ in 0..50 {
            let v = jade_mutation(&p, &[], 0, 1.0, 0.25, &mut rng).unwrap()[0];
            // v = x_best + (x_r1 - x_r2), r1 ≠ 0, r2 ∉ {0, r1}
            let ok = [1.0, 2.0, 3.0]
                .iter()
                .flat_map(|a| [1.0, 2.0, 3.0].iter().map(move |b| (a, b)))
                .any(|(a, b)| a != b && (1.0 + a - b - v).abs() < 1e-12);
            assert!(ok, "{v}");
        }
    }

    #[test]
    fn jade_zero_f_is_identity() {
        let p = pop(&[(0.3, 3.0), (1.0, 1.0), (2.0, 2.0)]);
        let mut rng = stream(1, 0);
        assert_eq!(
            jade_mutation(&p, &[vec![7.0]], 0, 0.0, 0.5, &mut rng).unwrap(),
            vec![0.3]
        );
        assert!(jade_mutation(&p, &[], 0, 0.5, 0.0, &mut rng).is_err());
        assert!(jade_mutation(&p[..2], &[], 0, 0.5, 0.5, &mut rng).is_err());
        assert!(jade_mutation(&p[..2], &[vec![5.0]], 0, 0.5, 0.5, &mut rng).is_ok());
    }

    #[test]
    fn archive_is_bounded() {
        let mut a = Archive::new(3);
        let mut rng = stream(0, 0);
        for k in 0..10 {
            a.push(vec![k as f64], &mut rng);
        }
        assert_eq!(a.members.len(), 3);
    }

    proptest! {
        #[test]
        fn sampled_f_in_unit_interval(seed in any::<u64>(), loc in 0.0f64..1.0, cr_loc in 0.0f64..1.0) {
            let mut m = ShadeMemory::new(1, 0.5).unwrap();
            m.m_f[0] = loc;
            m.m_cr[0] = cr_loc;
            let mut rng = stream(seed, 0);
            for _ in 0..20 {
                let (f, cr) = m.sample_params(&mut rng);
                prop_assert!(f > 0.0 && f <= 1.0);
                prop_assert!((0.0..=1.0).contains(&cr));
            }
        }
    }
}
