//! Synthetic replacement for electromagnetic/thermal layout simulation.
//!
//! Inductances are positive quadratic forms of the layout vector: a separable
//! part `sum_i a_i (x_i - c_i)^2` plus `coupling_count` pairwise terms
//! `b_k (x_i - x_j - d_k)^2`, all on top of a positive offset. The two
//! inductances draw independent coefficients from the same seed.
//!
//! Temperature is a log-sum-exp (smooth maximum) over heat sources. Each
//! source sits at a 2-D position read from two layout coordinates; its
//! temperature is its own power plus Gaussian heat bumps from every other
//! source, plus a linear dependence on the remaining coordinates.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SampleRecord};
use crate::rng::{self, mix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticOracleConfig {
    pub seed: u64,
    pub coupling_count: usize,
    pub noise_stddev: f64,
}

impl Default for SyntheticOracleConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            coupling_count: 8,
            noise_stddev: 0.0,
        }
    }
}

impl SyntheticOracleConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.noise_stddev >= 0.0 && self.noise_stddev.is_finite()) {
            return Err(DatasetError::InvalidArgument(format!(
                "noise_stddev {} must be finite and non-negative",
                self.noise_stddev
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub shift: f64,
}

/// `offset + sum_i a_i (x_i - c_i)^2 + sum_k b_k (x_i - x_j - d_k)^2`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub offset: f64,
    pub weights: Vec<f64>,
    pub centers: Vec<f64>,
    pub couplings: Vec<Coupling>,
}

impl QuadraticForm {
    fn sample(dim: usize, couplings: usize, offset: f64, scale: f64, rng: &mut rng::Rng64) -> Self {
        // a quarter of the coordinates dominate, the rest contribute weakly
        let major: Vec<bool> = (0..dim).map(|_| rng.random_bool(0.25)).collect();
        let weights = major
            .iter()
            .map(|&m| scale * if m { 1.0 } else { 0.03 } * rng.random_range(0.5..1.5))
            .collect();
        let centers = (0..dim).map(|_| rng.random_range(-0.5..0.2)).collect();
        let mut pool: Vec<usize> = (0..dim).filter(|&i| major[i]).collect();
        if pool.len() < 2 {
            pool = (0..dim).collect();
        }
        let couplings = if pool.len() < 2 {
            Vec::new()
        } else {
            (0..couplings)
                .map(|_| {
                    let a = rng.random_range(0..pool.len());
                    let mut b = rng.random_range(0..pool.len() - 1);
                    if b >= a {
                        b += 1;
                    }
                    let (i, j) = (pool[a], pool[b]);
                    Coupling {
                        i,
                        j,
                        weight: scale * rng.random_range(0.1..0.3),
                        shift: rng.random_range(-0.3..0.3),
                    }
                })
                .collect()
        };
        Self {
            offset,
            weights,
            centers,
            couplings,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let separable: f64 = self
            .weights
            .iter()
            .zip(&self.centers)
            .zip(x)
            .map(|((a, c), v)| a * (v - c) * (v - c))
            .sum();
        let coupled: f64 = self
            .couplings
            .iter()
            .map(|k| {
                let d = x[k.i] - x[k.j] - k.shift;
                k.weight * d * d
            })
            .sum();
        self.offset + separable + coupled
    }

    /// Expanded form `(Q, g, h)` with `f(x) = x^T Q x + g^T x + h`.
    pub fn expanded(&self) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
        let n = self.weights.len();
        let mut q = vec![vec![0.0; n]; n];
        let mut g = vec![0.0; n];
        let mut h = self.offset;
        for i in 0..n {
            let (a, c) = (self.weights[i], self.centers[i]);
            q[i][i] += a;
            g[i] -= 2.0 * a * c;
            h += a * c * c;
        }
        for k in &self.couplings {
            let (b, d) = (k.weight, k.shift);
            q[k.i][k.i] += b;
            q[k.j][k.j] += b;
            q[k.i][k.j] -= b;
            q[k.j][k.i] -= b;
            g[k.i] -= 2.0 * b * d;
            g[k.j] += 2.0 * b * d;
            h += b * d * d;
        }
        (q, g, h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatSource {
    /// Layout coordinates holding the source position.
    pub px: usize,
    pub py: usize,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalModel {
    pub ambient: f64,
    pub sources: Vec<HeatSource>,
    /// Width of the Gaussian heat bump.
    pub spread: f64,
    /// Temperature of the smooth maximum.
    pub softness: f64,
    pub linear: Vec<f64>,
}

impl ThermalModel {
    const MAX_SOURCES: usize = 3;

    fn sample(dim: usize, rng: &mut rng::Rng64) -> Self {
        let count = (dim / 2).min(Self::MAX_SOURCES);
        let mut coords: Vec<usize> = (0..dim).collect();
        coords.shuffle(rng);
        let sources: Vec<HeatSource> = (0..count)
            .map(|k| HeatSource {
                px: coords[2 * k],
                py: coords[2 * k + 1],
                power: rng.random_range(8.0..16.0),
            })
            .collect();
        let mut linear: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(-6.0..6.0)
                } else {
                    0.0
                }
            })
            .collect();
        for s in &sources {
            linear[s.px] = 0.0;
            linear[s.py] = 0.0;
        }
        Self {
            ambient: 25.0,
            sources,
            spread: 1.0,
            softness: 10.0,
            linear,
        }
    }

    pub fn source_temperatures(&self, x: &[f64]) -> Vec<f64> {
        let base = self.ambient + self.linear.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        let two_s2 = 2.0 * self.spread * self.spread;
        self.sources
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let bumps: f64 = self
                    .sources
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, o)| {
                        let dx = x[s.px] - x[o.px];
                        let dy = x[s.py] - x[o.py];
                        o.power * (-(dx * dx + dy * dy) / two_s2).exp()
                    })
                    .sum();
                base + s.power + bumps
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let temps = self.source_temperatures(x);
        if temps.is_empty() {
            return self.ambient + self.linear.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
        let hot = temps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tau = self.softness;
        hot + tau * temps.iter().map(|t| ((t - hot) / tau).exp()).sum::<f64>().ln()
    }
}

/// Deterministic metric generator for layouts in the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOracle {
    pub config: SyntheticOracleConfig,
    pub dim: usize,
    pub control_path: QuadraticForm,
    pub main_path: QuadraticForm,
    pub thermal: ThermalModel,
}

impl SyntheticOracle {
    pub fn new(config: &SyntheticOracleConfig, dim: usize) -> Result<Self, DatasetError> {
        config.validate()?;
        if dim == 0 {
            return Err(DatasetError::InvalidArgument("dimension must be at least 1".into()));
        }
        let mut r = rng::stream(config.seed, 0);
        let control_path = QuadraticForm::sample(dim, config.coupling_count, 2.0, 1.0, &mut r);
        let main_path = QuadraticForm::sample(dim, config.coupling_count, 5.0, 2.5, &mut r);
        let thermal = ThermalModel::sample(dim, &mut r);
        Ok(Self {
            config: config.clone(),
            dim,
            control_path,
            main_path,
            thermal,
        })
    }

    /// `(f1, f2, f3)` for `x` in `[0, 1]^dim`.
    pub fn evaluate(&self, x: &[f64]) -> Result<(f64, f64, f64), DatasetError> {
        if x.len() != self.dim {
            return Err(DatasetError::InvalidArgument(format!(
                "layout has {} entries, expected {}",
                x.len(),
                self.dim
            )));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(DatasetError::OutOfBounds { index, value });
        }
        let mut f = (self.control_path.eval(x), self.main_path.eval(x), self.thermal.eval(x));
        if self.config.noise_stddev > 0.0 {
            let key = x.iter().fold(mix64(self.config.seed), |h, v| mix64(h ^ v.to_bits()));
            let mut r = rng::stream(key, 2);
            let sd = self.config.noise_stddev;
            f.0 += sd * r.sample::<f64, _>(StandardNormal);
            f.1 += sd * r.sample::<f64, _>(StandardNormal);
            f.2 += sd * r.sample::<f64, _>(StandardNormal);
        }
        Ok(f)
    }
}

/// One-shot evaluation of the 36-dimensional oracle.
pub fn synthetic_oracle(x: &[f64], cfg: &SyntheticOracleConfig) -> Result<(f64, f64, f64), DatasetError> {
    SyntheticOracle::new(cfg, crate::LAYOUT_DIM)?.evaluate(x)
}

/// `count` layouts drawn uniformly from the unit box, labeled by the oracle.
pub fn gen_dataset(count: usize, cfg: &SyntheticOracleConfig) -> Result<Vec<SampleRecord>, DatasetError> {
    if count == 0 {
        return Err(DatasetError::InvalidArgument("count must be at least 1".into()));
    }
    let oracle = SyntheticOracle::new(cfg, crate::LAYOUT_DIM)?;
    let mut r = rng::stream(cfg.seed, 1);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..oracle.dim).map(|_| r.random_range(0.0..1.0)).collect();
            let (f1, f2, f3) = oracle.evaluate(&x)?;
            Ok(SampleRecord { x, f1, f2, f3 })
        })
        .collect()
}
