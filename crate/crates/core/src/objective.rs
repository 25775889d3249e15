//! Weighted-sum objective `F(x) = w1*l1(x) + w2*l2(x) + w3*l3(x)` over a box.
//!
//! Surrogate outputs are combined on their z-scored scale so inductances and
//! temperature contribute comparably regardless of simulation units.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surrogate::{SurrogateError, SurrogateModel};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("unknown scenario {0}; expected 1 or 2")]
    UnknownScenario(u32),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point outside search space at coordinate {index}: {value}")]
    OutOfBounds { index: usize, value: f64 },
    #[error("objective value is not finite")]
    NonFinite,
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// Axis-aligned box `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ObjectiveError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(ObjectiveError::InvalidSpace(
                "bounds must be nonempty and of equal length".into(),
            ));
        }
        if let Some(i) =
            (0..lower.len()).find(|&i| !(lower[i] < upper[i]) || !lower[i].is_finite() || !upper[i].is_finite())
        {
            return Err(ObjectiveError::InvalidSpace(format!(
                "coordinate {i}: lower {} must be below upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, ObjectiveError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// `[0, 1]^dim`, the normalized layout space.
    pub fn unit(dim: usize) -> Self {
        Self::uniform(dim, 0.0, 1.0).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn check(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        match x
            .iter()
            .enumerate()
            .find(|&(i, v)| !(*v >= self.lower[i] && *v <= self.upper[i]))
        {
            Some((index, &value)) => Err(ObjectiveError::OutOfBounds { index, value }),
            None => Ok(()),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    /// Projects every coordinate onto its interval.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| if v.is_nan() { lo } else { v.clamp(lo, hi) })
            .collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }
}

/// Free-function form of [`SearchSpace::clamp`].
pub fn clamp(space: &SearchSpace, x: &[f64]) -> Vec<f64> {
    space.clamp(x)
}

/// Preference weights on (control-path inductance, main-path inductance,
/// temperature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl WeightVector {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, ObjectiveError> {
        let w = [w1, w2, w3];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ObjectiveError::InvalidWeights(format!(
                "{w:?} must be finite and non-negative"
            )));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(ObjectiveError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self { w1, w2, w3 })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w1, self.w2, self.w3]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ObjectiveError> {
        Self::new(self.w1 * factor, self.w2 * factor, self.w3 * factor)
    }
}

/// Scenario 1 weights temperature double; scenario 2 weights all metrics
/// equally.
pub fn scenario_weights(scenario: u32) -> Result<WeightVector, ObjectiveError> {
    match scenario {
        1 => WeightVector::new(1.0, 1.0, 2.0),
        2 => WeightVector::new(1.0, 1.0, 1.0),
        other => Err(ObjectiveError::UnknownScenario(other)),
    }
}

/// A learned metric evaluated on normalized inputs.
pub trait Surrogate: Send + Sync {
    fn input_dim(&self) -> usize;
    fn eval_normalized(&self, u: &[f64]) -> Result<f64, ObjectiveError>;
}

impl Surrogate for SurrogateModel {
    fn input_dim(&self) -> usize {
        SurrogateModel::input_dim(self)
    }

    fn eval_normalized(&self, u: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(self.predict_normalized(u)?)
    }
}

/// Box-constrained minimization target with evaluation accounting.
pub trait Objective {
    fn space(&self) -> &SearchSpace;

    /// Value at `x`; fails if `x` lies outside [`Objective::space`].
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError>;

    /// Number of successful `evaluate` calls so far.
    fn evaluations(&self) -> u64;
}

#[derive(Clone)]
pub struct ScalarizedObjective {
    weights: WeightVector,
    surrogates: [Arc<dyn Surrogate>; 3],
    space: SearchSpace,
    eval_counter: u64,
}

impl std::fmt::Debug for ScalarizedObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarizedObjective")
            .field("weights", &self.weights)
            .field("space", &self.space)
            .field("eval_counter", &self.eval_counter)
            .finish_non_exhaustive()
    }
}

impl ScalarizedObjective {
    pub fn new(
        weights: WeightVector,
        surrogates: [Arc<dyn Surrogate>; 3],
        space: SearchSpace,
    ) -> Result<Self, ObjectiveError> {
        for s in &surrogates {
            if s.input_dim() != space.dim() {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: space.dim(),
                    actual: s.input_dim(),
                });
            }
        }
        Ok(Self {
            weights,
            surrogates,
            space,
            eval_counter: 0,
        })
    }

    pub fn weights(&self) -> WeightVector {
        self.weights
    }

    /// Same surrogates and space, different weights, fresh counter.
    pub fn with_weights(&self, weights: WeightVector) -> Self {
        Self {
            weights,
            surrogates: self.surrogates.clone(),
            space: self.space.clone(),
            eval_counter: 0,
        }
    }

    /// The three surrogate outputs at `x`, without touching the counter.
    pub fn components(&self, x: &[f64]) -> Result<[f64; 3], ObjectiveError> {
        self.space.check(x)?;
        let mut out = [0.0; 3];
        for (o, s) in out.iter_mut().zip(&self.surrogates) {
            *o = s.eval_normalized(x)?;
        }
        Ok(out)
    }
}

impl Objective for ScalarizedObjective {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let parts = self.components(x)?;
        let value: f64 = parts.iter().zip(self.weights.as_array()).map(|(l, w)| w * l).sum();
        if !value.is_finite() {
            return Err(ObjectiveError::NonFinite);
        }
        self.eval_counter += 1;
        Ok(value)
    }

    fn evaluations(&self) -> u64 {
        self.eval_counter
    }
}

/// Wraps a plain function as an [`Objective`]; used for benchmark landscapes.
pub struct FnObjective<F> {
    space: SearchSpace,
    f: F,
    counter: u64,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(space: SearchSpace, f: F) -> Self {
        Self { space, f, counter: 0 }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.space.check(x)?;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(ObjectiveError::NonFinite);
        }
        self.counter += 1;
        Ok(v)
    }

    fn evaluations(&self) -> u64 {
        self.counter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Returns a fixed value whatever the input.
    struct Const(f64, usize);

    impl Surrogate for Const {
        fn input_dim(&self) -> usize {
            self.1
        }
        fn eval_normalized(&self, _: &[f64]) -> Result<f64, ObjectiveError> {
            Ok(self.0)
        }
    }

    /// Linear in the first coordinate, so argmin tests have structure.
    struct Slope(f64);

    impl Surrogate for Slope {
        fn input_dim(&self) -> usize {
            2
        }
        fn eval_normalized(&self, u: &[f64]) -> Result<f64, ObjectiveError> {
            Ok(self.0 * u[0] - u[1] * u[1])
        }
    }

    fn constant_objective(outputs: [f64; 3], w: WeightVector) -> ScalarizedObjective {
        let s: [Arc<dyn Surrogate>; 3] = outputs.map(|v| Arc::new(Const(v, 2)) as Arc<dyn Surrogate>);
        ScalarizedObjective::new(w, s, SearchSpace::unit(2)).unwrap()
    }

    #[test]
    fn scenarios() {
        assert_eq!(scenario_weights(1).unwrap().as_array(), [1.0, 1.0, 2.0]);
        assert_eq!(scenario_weights(2).unwrap().as_array(), [1.0, 1.0, 1.0]);
        assert!(matches!(scenario_weights(3), Err(ObjectiveError::UnknownScenario(3))));
    }

    #[test]
    fn weighted_sums() {
        let mut o = constant_objective([0.5, 0.3, 1.0], scenario_weights(1).unwrap());
        assert!((o.evaluate(&[0.2, 0.2]).unwrap() - 2.8).abs() < 1e-15);
        let mut o = constant_objective([0.25, 0.5, 2.0], scenario_weights(2).unwrap());
        assert_eq!(o.evaluate(&[0.2, 0.2]).unwrap(), 2.75);
        let mut o = constant_objective([9.0, 9.0, 0.2], WeightVector::new(0.0, 0.0, 1.0).unwrap());
        assert_eq!(o.evaluate(&[0.2, 0.2]).unwrap(), 0.2);
    }

    #[test]
    fn counts_every_evaluation() {
        let mut o = constant_objective([1.0, 1.0, 1.0], scenario_weights(2).unwrap());
        for _ in 0..7 {
            o.evaluate(&[0.5, 0.5]).unwrap();
        }
        assert!(o.evaluate(&[1.5, 0.5]).is_err());
        assert_eq!(o.evaluations(), 7);
        assert_eq!(o.with_weights(scenario_weights(1).unwrap()).evaluations(), 0);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let mut o = constant_objective([1.0, 1.0, 1.0], scenario_weights(2).unwrap());
        assert!(matches!(
            o.evaluate(&[0.5, -0.1]),
            Err(ObjectiveError::OutOfBounds { index: 1, .. })
        ));
        assert!(o.evaluate(&[0.5]).is_err());
    }

    #[test]
    fn mismatched_surrogate_dim() {
        let s: [Arc<dyn Surrogate>; 3] = [
            Arc::new(Const(0.0, 2)),
            Arc::new(Const(0.0, 3)),
            Arc::new(Const(0.0, 2)),
        ];
        assert!(ScalarizedObjective::new(scenario_weights(1).unwrap(), s, SearchSpace::unit(2)).is_err());
    }

    #[test]
    fn clamp_examples() {
        let space = SearchSpace::unit(3);
        assert_eq!(clamp(&space, &[0.2, 0.4, 1.0]), vec![0.2, 0.4, 1.0]);
        assert_eq!(clamp(&space, &[1.5, -0.2, 0.5]), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(SearchSpace::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SearchSpace::new(vec![], vec![]).is_err());
        assert!(WeightVector::new(0.0, 0.0, 0.0).is_err());
        assert!(WeightVector::new(-1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent_and_feasible(x in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let space = SearchSpace::new(vec![-1.0, 0.0, 0.5, -3.0], vec![1.0, 2.0, 0.75, 3.0]).unwrap();
            let once = space.clamp(&x);
            prop_assert!(space.contains(&once));
            prop_assert_eq!(space.clamp(&once), once);
        }

        #[test]
        fn linear_in_weights(
            w in proptest::array::uniform3(0.0f64..4.0),
            pts in proptest::collection::vec(proptest::array::uniform2(0.0f64..=1.0), 1..12),
            factor in 0.1f64..10.0,
        ) {
            prop_assume!(w.iter().any(|&v| v > 0.0));
            let s: [Arc<dyn Surrogate>; 3] = [Arc::new(Slope(1.0)), Arc::new(Slope(-2.0)), Arc::new(Slope(0.5))];
            let base = WeightVector::new(w[0], w[1], w[2]).unwrap();
            let mut a = ScalarizedObjective::new(base, s, SearchSpace::unit(2)).unwrap();
            let mut b = a.with_weights(base.scaled(2.0).unwrap());
            let mut c = a.with_weights(base.scaled(factor).unwrap());
            let argmin = |o: &mut ScalarizedObjective| {
                let vals: Vec<f64> = pts.iter().map(|p| o.evaluate(p).unwrap()).collect();
                (vals.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).unwrap().0, vals)
            };
            let (ia, va) = argmin(&mut a);
            let (_, vb) = argmin(&mut b);
            let (ic, _) = argmin(&mut c);
            for (x, y) in va.iter().zip(&vb) {
                prop_assert_eq!(2.0 * x, *y);
            }
            // positive rescaling preserves the minimizer's value class
            let (_, va2) = argmin(&mut a);
            prop_assert_eq!(va2[ia], va2[ic]);
        }
    }
}
