//! Ten Differential Evolution variants behind one [`run`] entry point.
//!
//! Every variant uses a synchronous generation loop: all trial vectors of a
//! generation are built from the same parent population, then evaluated, then
//! selected. Candidates are clamped into the search box before evaluation and
//! the run stops exactly when `max_evals` evaluations have been spent.
//!
//! | id     | mutation / mechanism                                                   |
//! |--------|------------------------------------------------------------------------|
//! | DERAND | `x_r1 + F (x_r2 - x_r3)`, binomial crossover                           |
//! | DEBEST | `x_best + F (x_r1 - x_r2)`, binomial crossover                         |
//! | DESPS  | rand/1 with donors drawn inside the target's species                   |
//! | SHADE  | current-to-pbest/1 + archive, F/CR sampled from a success history      |
//! | RBDE   | rand/1 with base and first difference vector chosen by linear rank     |
//! | JADE   | current-to-pbest/1 + archive, F/CR means adapted with rate `c`         |
//! | DEGL   | convex mix of ring-neighborhood (local) and population (global) moves, |
//! |        | global weight rising linearly from 0 to 1 over the budget              |
//! | DESIM  | rand/1 with donors sampled by Euclidean similarity to the target      |
//! | DCMAEA | CMA sample plus DE difference vector; CMA updated from the population |
//! | OBDE   | opposition-based initialization and generation jumping on rand/1      |

mod adaptive;
mod dcmaea;
mod operators;
mod structured;
mod trace;
mod variants;

pub use adaptive::{jade_mutation, lehmer_mean, pbest_candidates, Archive, JadeState, ShadeMemory};
pub use dcmaea::{dcmaea_step, CmaState};
pub use operators::{
    best1_donor, crossover_binomial, mutate_best1, mutate_rand1, opposition_point, rand1_donor, select_greedy,
};
pub use structured::{
    degl_mutation, rank_selection_probabilities, similarity_mutation, similarity_weights, speciation_partition, Species,
};
pub use trace::{read_trace_csv, trace_file_name, write_trace_csv};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{Objective, ObjectiveError, SearchSpace};
use crate::rng::{self, Rng64};

#[derive(Debug, Error)]
pub enum DeError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("population too small: need {needed}, have {got}")]
    InsufficientPopulation { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("individual has not been evaluated")]
    Unevaluated,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trace file {path}: {message}")]
    Trace { path: String, message: String },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VariantId {
    Derand,
    Debest,
    Desps,
    Shade,
    Rbde,
    Jade,
    Degl,
    Desim,
    Dcmaea,
    Obde,
}

impl VariantId {
    pub const ALL: [VariantId; 10] = [
        VariantId::Derand,
        VariantId::Debest,
        VariantId::Desps,
        VariantId::Shade,
        VariantId::Rbde,
        VariantId::Jade,
        VariantId::Degl,
        VariantId::Desim,
        VariantId::Dcmaea,
        VariantId::Obde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::Derand => "DERAND",
            VariantId::Debest => "DEBEST",
            VariantId::Desps => "DESPS",
            VariantId::Shade => "SHADE",
            VariantId::Rbde => "RBDE",
            VariantId::Jade => "JADE",
            VariantId::Degl => "DEGL",
            VariantId::Desim => "DESIM",
            VariantId::Dcmaea => "DCMAEA",
            VariantId::Obde => "OBDE",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            VariantId::Derand => "DE/rand/1/bin",
            VariantId::Debest => "DE/best/1/bin",
            VariantId::Desps => "DE with speciation",
            VariantId::Shade => "success-history based adaptive DE",
            VariantId::Rbde => "rank-based DE",
            VariantId::Jade => "adaptive DE with external archive",
            VariantId::Degl => "DE with local and global neighborhoods",
            VariantId::Desim => "DE with similarity based mutation",
            VariantId::Dcmaea => "differential covariance matrix adaptation",
            VariantId::Obde => "opposition based DE",
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantId {
    type Err = DeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DeError::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Variant-specific settings keyed by `"<variant>.<name>"`. Missing keys take
/// the defaults listed in [`VariantParams::DEFAULTS`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariantParams(pub BTreeMap<String, f64>);

impl VariantParams {
    pub const DEFAULTS: &'static [(&'static str, f64)] = &[
        ("shade.memory_size", 10.0),
        ("shade.p_max", 0.2),
        ("shade.archive_factor", 1.0),
        ("jade.p", 0.1),
        ("jade.c", 0.1),
        ("jade.archive_factor", 1.0),
        ("degl.k", 2.0),
        ("degl.weight", 0.5),
        // nonzero: weight grows linearly 0 → 1 over the budget
        ("degl.linear_weight", 1.0),
        // fraction of the search-box diagonal
        ("desps.radius", 0.1),
        // 0 means half the population
        ("desps.species_cap", 0.0),
        ("obde.jump_rate", 0.3),
        // fraction of the mean box width
        ("dcmaea.sigma0", 0.3),
    ];

    pub fn get(&self, key: &str) -> f64 {
        self.0.get(key).copied().unwrap_or_else(|| {
            Self::DEFAULTS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no default for variant parameter {key}"))
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.0.insert(key.to_string(), value);
        self
    }

    /// All keys with their effective values.
    pub fn resolved(&self) -> BTreeMap<String, f64> {
        Self::DEFAULTS
            .iter()
            .map(|(k, _)| (k.to_string(), self.get(k)))
            .collect()
    }

    fn validate(&self) -> Result<(), DeError> {
        for (k, v) in &self.0 {
            if !Self::DEFAULTS.iter().any(|(d, _)| d == k) {
                return Err(DeError::InvalidConfig(format!("unknown variant parameter {k:?}")));
            }
            if !v.is_finite() || *v < 0.0 {
                return Err(DeError::InvalidConfig(format!("variant parameter {k} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DEConfig {
    pub pop_size: usize,
    pub crossover_prob: f64,
    pub scale_factor: f64,
    pub max_evals: usize,
    pub seed: u64,
    pub variant_params: VariantParams,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            pop_size: 10,
            crossover_prob: 0.5,
            scale_factor: 0.7,
            max_evals: 1000,
            seed: 0,
            variant_params: VariantParams::default(),
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<(), DeError> {
        if self.pop_size < 4 {
            return Err(DeError::InvalidConfig(format!("pop_size {} < 4", self.pop_size)));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(DeError::InvalidConfig(format!(
                "crossover_prob {} outside [0, 1]",
                self.crossover_prob
            )));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(DeError::InvalidConfig(format!(
                "scale_factor {} must be > 0",
                self.scale_factor
            )));
        }
        if self.max_evals < self.pop_size {
            return Err(DeError::InvalidConfig(format!(
                "max_evals {} < pop_size {}",
                self.max_evals, self.pop_size
            )));
        }
        self.variant_params.validate()
    }
}

/// A candidate layout and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    pub fitness: f64,
    pub evaluated: bool,
}

impl Individual {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            fitness: f64::NAN,
            evaluated: false,
        }
    }

    pub fn with_fitness(x: Vec<f64>, fitness: f64) -> Self {
        Self {
            x,
            fitness,
            evaluated: true,
        }
    }
}

pub type Population = Vec<Individual>;

/// Index of the lowest fitness; the first one wins ties.
pub fn best_index(pop: &[Individual]) -> usize {
    pop.iter()
        .enumerate()
        .min_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Population indices sorted by fitness (stable, best first).
pub fn ranked_indices(pop: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness));
    idx
}

/// Best-so-far objective value after every evaluation of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub best_so_far: Vec<f64>,
    pub best_x: Vec<f64>,
    pub variant: VariantId,
    pub seed: u64,
}

impl RunTrace {
    pub fn final_best(&self) -> f64 {
        self.best_so_far.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Budgeted gateway to the objective. Clamps candidates into the box and
/// records the best-so-far trace.
pub struct Evaluator<'a> {
    objective: &'a mut dyn Objective,
    budget: usize,
    trace: Vec<f64>,
    best: f64,
    best_x: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(objective: &'a mut dyn Objective, budget: usize) -> Self {
        Self {
            objective,
            budget,
            trace: Vec::with_capacity(budget),
            best: f64::INFINITY,
            best_x: Vec::new(),
        }
    }

    pub fn space(&self) -> &SearchSpace {
        self.objective.space()
    }

    pub fn used(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    /// Evaluates the clamped candidate, or returns `None` once the budget is
    /// spent.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<Option<Individual>, DeError> {
        if self.exhausted() {
            return Ok(None);
        }
        let x = self.objective.space().clamp(x);
        let f = self.objective.evaluate(&x)?;
        if f < self.best || self.best_x.is_empty() {
            self.best = f.min(self.best);
            self.best_x.clone_from(&x);
        }
        self.trace.push(self.best);
        Ok(Some(Individual::with_fitness(x, f)))
    }

    /// Evaluates candidates in order; `None` if the budget ran out first.
    pub fn evaluate_all(&mut self, xs: &[Vec<f64>]) -> Result<Option<Vec<Individual>>, DeError> {
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            match self.evaluate(x)? {
                Some(ind) => out.push(ind),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn into_trace(self, variant: VariantId, seed: u64) -> RunTrace {
        RunTrace {
            best_so_far: self.trace,
            best_x: self.best_x,
            variant,
            seed,
        }
    }
}

/// `pop_size` points uniform in the box, each evaluated once.
pub fn init_population(cfg: &DEConfig, ev: &mut Evaluator<'_>, rng: &mut Rng64) -> Result<Population, DeError> {
    if cfg.pop_size < 4 {
        return Err(DeError::InvalidConfig(format!("pop_size {} < 4", cfg.pop_size)));
    }
    let xs: Vec<Vec<f64>> = (0..cfg.pop_size).map(|_| uniform_point(ev.space(), rng)).collect();
    ev.evaluate_all(&xs)?
        .ok_or_else(|| DeError::InvalidConfig("budget smaller than the population".into()))
}

pub(crate) fn uniform_point(space: &SearchSpace, rng: &mut Rng64) -> Vec<f64> {
    space
        .lower()
        .iter()
        .zip(space.upper())
        .map(|(&lo, &hi)| lo + rng.random::<f64>() * (hi - lo))
        .collect()
}

/// Runs `variant` on `objective` until `cfg.max_evals` evaluations are spent.
pub fn run(variant: VariantId, objective: &mut dyn Objective, cfg: &DEConfig) -> Result<RunTrace, DeError> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, 0);
    let mut ev = Evaluator::new(objective, cfg.max_evals);
    let pop = match variant {
        VariantId::Obde => variants::obde_init(cfg, &mut ev, &mut rng)?,
        _ => init_population(cfg, &mut ev, &mut rng)?,
    };
    if !ev.exhausted() {
        variants::evolve(variant, pop, cfg, &mut ev, &mut rng)?;
    }
    debug_assert!(ev.exhausted());
    Ok(ev.into_trace(variant, cfg.seed))
}
