use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DenseNetwork, NetworkSpec, SurrogateError, SurrogateModel};
use crate::dataset::{DataSplit, Metric, NormalizationStats, SampleRecord};
use crate::rng;

/// Features and targets, row-major, already on the network's scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
}

impl RegressionData {
    pub fn new(features: Array2<f64>, targets: Array1<f64>) -> Result<Self, SurrogateError> {
        if features.nrows() != targets.len() {
            return Err(SurrogateError::DimensionMismatch {
                expected: features.nrows(),
                actual: targets.len(),
            });
        }
        Ok(Self { features, targets })
    }

    /// Normalized features and z-scored targets of `metric`.
    pub fn from_records(records: &[SampleRecord], stats: &NormalizationStats, metric: Metric) -> Self {
        let dim = stats.x_min.len();
        let mut features = Array2::zeros((records.len(), dim));
        for (mut row, r) in features.rows_mut().into_iter().zip(records) {
            for (dst, v) in row.iter_mut().zip(stats.normalize_x(&r.x)) {
                *dst = v;
            }
        }
        let targets = records.iter().map(|r| stats.zscore(metric, r.metric(metric))).collect();
        Self { features, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs without test-MSE improvement tolerated before stopping.
    pub early_stop_patience: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            early_stop_patience: 50,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.max_epochs == 0 {
            return Err(SurrogateError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(SurrogateError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SurrogateError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// `(train MSE, test MSE)` after each epoch.
    pub mse_history: Vec<(f64, f64)>,
    pub final_test_mse: f64,
    pub wall_time_seconds: f64,
    pub spec: NetworkSpec,
}

/// Mean squared prediction error of `net` on `data`.
pub fn mse(net: &DenseNetwork, data: &RegressionData) -> Result<f64, SurrogateError> {
    if data.is_empty() {
        return Err(SurrogateError::EmptyData);
    }
    if data.dim() != net.input_dim() {
        return Err(SurrogateError::DimensionMismatch {
            expected: net.input_dim(),
            actual: data.dim(),
        });
    }
    let pred = net.forward_batch(data.features.view());
    let sse: f64 = pred
        .iter()
        .zip(data.targets.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sse / data.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, net: &mut DenseNetwork, grads: &super::Gradients) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mut k = 0;
        for (layer, (gw, gb)) in net.layers_mut().iter_mut().zip(grads.weights.iter().zip(&grads.bias)) {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            for (p, g) in params.zip(gw.iter().chain(gb.iter())) {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                k += 1;
            }
        }
    }
}

/// Trains `net` in place with mini-batch Adam and early stopping on the test
/// split. On return `net` holds the parameters of the epoch with the lowest
/// test MSE.
pub fn train(
    net: &mut DenseNetwork,
    train: &RegressionData,
    test: &RegressionData,
    cfg: &TrainingConfig,
) -> Result<TrainingReport, SurrogateError> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(SurrogateError::EmptyData);
    }
    for d in [train, test] {
        if d.dim() != net.input_dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: net.input_dim(),
                actual: d.dim(),
            });
        }
    }

    let started = Instant::now();
    let mut shuffle_rng = rng::stream(cfg.seed, 1);
    let mut adam = Adam::new(net.parameter_count(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, DenseNetwork)> = None;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xb = train.features.select(Axis(0), chunk);
            let yb = train.targets.select(Axis(0), chunk);
            let (loss, grads) = net.loss_and_gradient(xb.view(), yb.view());
            if !loss.is_finite() {
                return Err(SurrogateError::TrainingDiverged { epoch });
            }
            adam.step(net, &grads);
        }
        let train_mse = mse(net, train)?;
        let test_mse = mse(net, test)?;
        if !train_mse.is_finite() || !test_mse.is_finite() {
            return Err(SurrogateError::TrainingDiverged { epoch });
        }
        history.push((train_mse, test_mse));

        match &best {
            Some((b, _)) if test_mse >= *b => stale += 1,
            _ => {
                best = Some((test_mse, net.clone()));
                stale = 0;
            }
        }
        if stale > cfg.early_stop_patience {
            break;
        }
    }

    let (final_test_mse, snapshot) = best.expect("at least one epoch ran");
    *net = snapshot;
    Ok(TrainingReport {
        mse_history: history,
        final_test_mse,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        spec: net.spec(),
    })
}

/// Builds and trains the surrogate of one metric on a normalized split.
pub fn fit_surrogate(
    split: &DataSplit,
    stats: &NormalizationStats,
    metric: Metric,
    spec: &NetworkSpec,
    cfg: &TrainingConfig,
) -> Result<(SurrogateModel, TrainingReport), SurrogateError> {
    let train_data = RegressionData::from_records(&split.train, stats, metric);
    let test_data = RegressionData::from_records(&split.test, stats, metric);
    let mut net = DenseNetwork::build(spec, stats.x_min.len(), cfg.seed)?;
    let report = train(&mut net, &train_data, &test_data, cfg)?;
    let model = SurrogateModel::new(net, metric, stats)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::Array2;
    use rand::Rng;

    fn linear_data(n: usize, dim: usize, seed: u64) -> RegressionData {
        let mut r = rng::stream(seed, 9);
        let coef: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let x = Array2::from_shape_simple_fn((n, dim), || r.random_range(0.0..1.0));
        let y: Array1<f64> = x
            .rows()
            .into_iter()
            .map(|row| row.dot(&Array1::from(coef.clone())))
            .collect();
        // z-score so the bound is scale free
        let mean = y.mean().unwrap();
        let sd = y.std(0.0);
        RegressionData::new(x, y.mapv(|v| (v - mean) / sd)).unwrap()
    }

    fn split(data: &RegressionData, n_train: usize) -> (RegressionData, RegressionData) {
        let s = ndarray::s![..n_train, ..];
        let t = ndarray::s![n_train.., ..];
        (
            RegressionData::new(
                data.features.slice(s).to_owned(),
                data.targets.slice(ndarray::s![..n_train]).to_owned(),
            )
            .unwrap(),
            RegressionData::new(
                data.features.slice(t).to_owned(),
                data.targets.slice(ndarray::s![n_train..]).to_owned(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn mse_examples() {
        let layer = super::super::DenseLayer {
            weights: Array2::zeros((1, 1)),
            bias: ndarray::array![1.0],
            activation: super::super::Activation::Identity,
        };
        let net = DenseNetwork::from_layers(1, vec![layer]).unwrap();
        let one = RegressionData::new(Array2::zeros((1, 1)), ndarray::array![3.0]).unwrap();
        assert_eq!(mse(&net, &one).unwrap(), 4.0);
        let two = RegressionData::new(Array2::zeros((2, 1)), ndarray::array![2.0, 4.0]).unwrap();
        assert_eq!(mse(&net, &two).unwrap(), 5.0);
        let exact = RegressionData::new(Array2::zeros((2, 1)), ndarray::array![1.0, 1.0]).unwrap();
        assert_eq!(mse(&net, &exact).unwrap(), 0.0);
        let empty = RegressionData::new(Array2::zeros((0, 1)), Array1::zeros(0)).unwrap();
        assert!(matches!(mse(&net, &empty), Err(SurrogateError::EmptyData)));
    }

    #[test]
    fn learns_a_linear_map() {
        let data = linear_data(1000, 36, 4);
        let (tr, te) = split(&data, 800);
        let spec = NetworkSpec::custom(vec![20, 10]).unwrap();
        let mut net = DenseNetwork::build(&spec, 36, 1).unwrap();
        let report = train(&mut net, &tr, &te, &TrainingConfig::default()).unwrap();
        assert!(report.final_test_mse <= 1e-3, "test mse {}", report.final_test_mse);
        assert!(report.mse_history.len() <= 500);
    }

    #[test]
    fn returned_network_is_the_best_snapshot() {
        let data = linear_data(200, 5, 8);
        let (tr, te) = split(&data, 150);
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![8]).unwrap(), 5, 2).unwrap();
        let cfg = TrainingConfig {
            max_epochs: 40,
            early_stop_patience: 5,
            ..Default::default()
        };
        let report = train(&mut net, &tr, &te, &cfg).unwrap();
        let again = mse(&net, &te).unwrap();
        assert!((again - report.final_test_mse).abs() <= 1e-12 * report.final_test_mse.abs());
        let min = report.mse_history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
        assert_eq!(min, report.final_test_mse);
    }

    #[test]
    fn single_epoch_budget() {
        let data = linear_data(50, 3, 1);
        let (tr, te) = split(&data, 40);
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![4]).unwrap(), 3, 0).unwrap();
        let cfg = TrainingConfig {
            max_epochs: 1,
            early_stop_patience: 0,
            ..Default::default()
        };
        let report = train(&mut net, &tr, &te, &cfg).unwrap();
        assert_eq!(report.mse_history.len(), 1);
    }

    #[test]
    fn training_is_deterministic() {
        let data = linear_data(120, 4, 3);
        let (tr, te) = split(&data, 100);
        let spec = NetworkSpec::custom(vec![6, 3]).unwrap();
        let cfg = TrainingConfig {
            max_epochs: 15,
            seed: 77,
            ..Default::default()
        };
        let run = || {
            let mut net = DenseNetwork::build(&spec, 4, cfg.seed).unwrap();
            let r = train(&mut net, &tr, &te, &cfg).unwrap();
            (r.mse_history, net)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn constant_targets_reach_the_bias_optimum() {
        let x = Array2::from_shape_fn((64, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        let y = Array1::from_elem(64, 0.8);
        let data = RegressionData::new(x, y).unwrap();
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![4]).unwrap(), 3, 5).unwrap();
        let before = mse(&net, &data).unwrap();
        let cfg = TrainingConfig {
            max_epochs: 300,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let report = train(&mut net, &data, &data, &cfg).unwrap();
        let after = report.mse_history.last().unwrap().0;
        assert!(after < before);
        assert!(
            report.final_test_mse < 1e-2 * before,
            "{} vs {}",
            report.final_test_mse,
            before
        );
    }

    #[test]
    fn noise_targets_do_not_exceed_their_variance() {
        let mut r = rng::stream(3, 3);
        let x = Array2::from_shape_simple_fn((200, 4), || r.random_range(0.0..1.0));
        let y: Array1<f64> = (0..200).map(|_| r.random_range(-1.0..1.0)).collect();
        let var = y.var(0.0);
        let data = RegressionData::new(x, y).unwrap();
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![8]).unwrap(), 4, 1).unwrap();
        let cfg = TrainingConfig {
            max_epochs: 100,
            ..Default::default()
        };
        let report = train(&mut net, &data, &data, &cfg).unwrap();
        assert!(report.final_test_mse <= var, "{} > {}", report.final_test_mse, var);
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let data = linear_data(64, 3, 2);
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![4]).unwrap(), 3, 0).unwrap();
        let mut params = net.parameters();
        params[0] = 1e200;
        params[1] = -1e200;
        net.set_parameters(&params).unwrap();
        let bad = RegressionData::new(data.features.mapv(|v| v * 1e200 + 1e200), data.targets.clone()).unwrap();
        let err = train(&mut net, &bad, &bad, &TrainingConfig::default()).unwrap_err();
        assert!(matches!(err, SurrogateError::TrainingDiverged { epoch: 1 }), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = linear_data(10, 3, 2);
        let empty = RegressionData::new(Array2::zeros((0, 3)), Array1::zeros(0)).unwrap();
        let mut net = DenseNetwork::build(&NetworkSpec::custom(vec![4]).unwrap(), 3, 0).unwrap();
        assert!(matches!(
            train(&mut net, &empty, &data, &TrainingConfig::default()),
            Err(SurrogateError::EmptyData)
        ));
        let mut wide = DenseNetwork::build(&NetworkSpec::custom(vec![4]).unwrap(), 5, 0).unwrap();
        assert!(train(&mut wide, &data, &data, &TrainingConfig::default()).is_err());
        let cfg = TrainingConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            train(&mut net, &data, &data, &cfg),
            Err(SurrogateError::InvalidConfig(_))
        ));
    }
}
