//! Differential covariance matrix adaptation.
//!
//! Each offspring starts from a sample of the CMA search distribution,
//! `m + σ B D z`, adds a DE difference vector `F (x_r1 - x_r2)` and is crossed
//! binomially with its target. After greedy selection the distribution
//! (mean, evolution paths, covariance, step size) is updated from the μ best
//! population members with the standard CMA-ES rules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::operators::{crossover_binomial, sample_distinct, select_greedy};
use super::{ranked_indices, DeError, Evaluator, Individual, Population};
use crate::rng::Rng64;

#[derive(Debug, Clone)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    p_c: DVector<f64>,
    p_sigma: DVector<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    generation: u32,
    weights: Vec<f64>,
    mu_eff: f64,
    c_c: f64,
    c_sigma: f64,
    c1: f64,
    c_mu: f64,
    d_sigma: f64,
    chi_n: f64,
    sigma_max: f64,
}

impl CmaState {
    /// Identity covariance around `mean`; `lambda` is the population size
    /// the recombination weights are built for.
    pub fn new(mean: Vec<f64>, sigma: f64, lambda: usize, sigma_max: f64) -> Result<Self, DeError> {
        let n = mean.len();
        if n == 0 || lambda < 2 || !(sigma >= 0.0) {
            return Err(DeError::InvalidArgument(format!(
                "CMA state needs dim ≥ 1, λ ≥ 2, σ ≥ 0 (got {n}, {lambda}, {sigma})"
            )));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(Self {
            mean: DVector::from_vec(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            p_c: DVector::zeros(n),
            p_sigma: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            generation: 0,
            weights,
            mu_eff,
            c_c,
            c_sigma,
            c1,
            c_mu,
            d_sigma,
            chi_n,
            sigma_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `m + σ B D z` with `z ~ N(0, I)`.
    pub fn sample(&self, rng: &mut Rng64) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        let y = &self.basis * self.scales.component_mul(&z);
        (&self.mean + y * self.sigma).iter().copied().collect()
    }

    /// Largest absolute entry of `C - Cᵀ`.
    pub fn asymmetry(&self) -> f64 {
        (&self.cov - self.cov.transpose()).amax()
    }

    /// One CMA update from `selected`, best first. Only the first μ points
    /// are used.
    pub fn update(&mut self, selected: &[&[f64]]) -> Result<(), DeError> {
        let n = self.dim();
        let mu = self.weights.len().min(selected.len());
        if mu == 0 {
            return Ok(());
        }
        let wsum: f64 = self.weights[..mu].iter().sum();
        let w: Vec<f64> = self.weights[..mu].iter().map(|v| v / wsum).collect();
        let old = self.mean.clone();
        let sigma = self.sigma.max(f64::MIN_POSITIVE);

        let ys: Vec<DVector<f64>> = selected[..mu]
            .iter()
            .map(|x| {
                if x.len() != n {
                    return Err(DeError::DimensionMismatch {
                        expected: n,
                        actual: x.len(),
                    });
                }
                Ok((DVector::from_column_slice(x) - &old) / sigma)
            })
            .collect::<Result<_, _>>()?;
        let y_w = ys.iter().zip(&w).fold(DVector::zeros(n), |acc, (y, wk)| acc + y * *wk);
        self.mean = &old + &y_w * sigma;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_sqrt_y = &self.basis * (self.basis.transpose() * &y_w).component_div(&self.scales);
        self.p_sigma = &self.p_sigma * (1.0 - self.c_sigma)
            + inv_sqrt_y * (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt();
        self.generation += 1;
        let norm_ps = self.p_sigma.norm();
        let decay = 1.0 - (1.0 - self.c_sigma).powi(2 * self.generation as i32);
        let h_sigma = if norm_ps / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * self.chi_n {
            1.0
        } else {
            0.0
        };
        self.p_c = &self.p_c * (1.0 - self.c_c) + &y_w * (h_sigma * (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt());

        let rank_one = &self.p_c * self.p_c.transpose();
        let rank_mu = ys
            .iter()
            .zip(&w)
            .fold(DMatrix::zeros(n, n), |acc, (y, wk)| acc + (y * y.transpose()) * *wk);
        let dh = (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c);
        self.cov =
            &self.cov * (1.0 - self.c1 - self.c_mu) + (rank_one + &self.cov * dh) * self.c1 + rank_mu * self.c_mu;

        self.sigma =
            (self.sigma * ((self.c_sigma / self.d_sigma) * (norm_ps / self.chi_n - 1.0)).exp()).min(self.sigma_max);
        self.decompose();
        Ok(())
    }

    /// Symmetrizes C, refreshes B and D, and floors eigenvalues that lost
    /// positivity.
    fn decompose(&mut self) {
        let n = self.dim();
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let largest = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
        let floor = largest * 1e-14;
        let mut values = eig.eigenvalues.clone();
        if values.iter().any(|&v| !(v >= floor)) {
            log::warn!("covariance lost positive definiteness; flooring eigenvalues at {floor:e}");
            values.apply(|v| *v = if v.is_finite() { v.max(floor) } else { floor });
        }
        let b = eig.eigenvectors;
        let mut cov = &b * DMatrix::from_diagonal(&values) * b.transpose();
        for i in 0..n {
            for j in 0..i {
                cov[(i, j)] = cov[(j, i)];
            }
        }
        self.cov = cov;
        self.scales = values.map(f64::sqrt);
        self.basis = b;
    }
}

/// One generation: builds and evaluates an offspring per target, replaces
/// targets greedily in `pop`, then adapts `state`. Returns the offspring, or
/// `None` when the budget ran out mid-generation (`pop` is then left as it
/// was).
pub fn dcmaea_step(
    state: &mut CmaState,
    pop: &mut Population,
    ev: &mut Evaluator<'_>,
    f: f64,
    cr: f64,
    rng: &mut Rng64,
) -> Result<Option<Vec<Individual>>, DeError> {
    let n = pop.len();
    let mut trials = Vec::with_capacity(n);
    for i in 0..n {
        let base = state.sample(rng);
        let r = sample_distinct(rng, n, &[i], 2)?;
        let donor: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(j, &b)| b + f * (pop[r[0]].x[j] - pop[r[1]].x[j]))
            .collect();
        trials.push(crossover_binomial(&pop[i].x, &donor, cr, rng)?);
    }
    let Some(offspring) = ev.evaluate_all(&trials)? else {
        return Ok(None);
    };
    for (target, trial) in pop.iter_mut().zip(&offspring) {
        *target = select_greedy(target, trial)?;
    }
    let order = ranked_indices(pop);
    let selected: Vec<&[f64]> = order.iter().map(|&i| pop[i].x.as_slice()).collect();
    state.update(&selected)?;
    Ok(Some(offspring))
}
