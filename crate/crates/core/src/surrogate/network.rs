use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NetworkSpec, SurrogateError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply_inplace(self, z: &mut Array2<f64>) {
        if self == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
    }
}

/// Fully connected layer. `weights` has shape `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

/// Single-output feedforward regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    table_index: Option<usize>,
}

/// Loss gradients with the same layout as [`DenseNetwork`] layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl DenseNetwork {
    /// Builds a ReLU network for `spec`. Weights and biases are drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn build(spec: &NetworkSpec, input_dim: usize, seed: u64) -> Result<Self, SurrogateError> {
        spec.validate()?;
        if input_dim == 0 {
            return Err(SurrogateError::InvalidSpec("input_dim must be at least 1".into()));
        }
        let mut rng = rng::stream(seed, 0);
        let mut dims = Vec::with_capacity(spec.hidden_widths.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(&spec.hidden_widths);
        dims.push(1);

        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (1.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit));
                let bias = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-limit..limit));
                DenseLayer {
                    weights,
                    bias,
                    activation: if i == last {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                }
            })
            .collect();
        Ok(Self {
            input_dim,
            layers,
            table_index: spec.table_index,
        })
    }

    /// Assembles a network from explicit layers, checking that dimensions chain,
    /// the output is a single linear unit, and every parameter is finite.
    pub fn from_layers(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self, SurrogateError> {
        let last = layers
            .last()
            .ok_or_else(|| SurrogateError::InvalidSpec("network needs at least one layer".into()))?;
        if last.fan_out() != 1 || last.activation != Activation::Identity {
            return Err(SurrogateError::InvalidSpec(
                "output layer must be a single identity unit".into(),
            ));
        }
        let mut expected = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.fan_in() != expected || layer.bias.len() != layer.fan_out() {
                return Err(SurrogateError::InvalidSpec(format!("layer {i} does not chain")));
            }
            if layer.fan_out() == 0 {
                return Err(SurrogateError::InvalidSpec(format!("layer {i} has width 0")));
            }
            if !layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(SurrogateError::InvalidSpec(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
            expected = layer.fan_out();
        }
        Ok(Self {
            input_dim,
            layers,
            table_index: None,
        })
    }

    pub fn with_table_index(mut self, index: Option<usize>) -> Self {
        self.table_index = index;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        1
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn table_index(&self) -> Option<usize> {
        self.table_index
    }

    /// Hidden widths of this network as a spec.
    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec {
            hidden_widths: self.layers[..self.layers.len() - 1]
                .iter()
                .map(DenseLayer::fan_out)
                .collect(),
            table_index: self.table_index,
        }
    }

    /// `input_dim -> h1 -> ... -> 1`
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(DenseLayer::fan_out))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters flattened, layer by layer, weights (row-major) then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), SurrogateError> {
        if params.len() != self.parameter_count() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| {
                *p = it.next().unwrap_or_default();
            });
        }
        Ok(())
    }

    /// Prediction for one input on the network's (normalized) output scale.
    pub fn forward(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        if x.len() != self.input_dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(SurrogateError::NonFiniteInput(pos));
        }
        let mut a = Array1::from(x.to_vec());
        for l in &self.layers {
            let mut z = a.dot(&l.weights) + &l.bias;
            if l.activation == Activation::Relu {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a[0])
    }

    /// Predictions for a batch of row-major inputs. Shapes are not checked.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        for l in &self.layers {
            let mut z = a.dot(&l.weights) + &l.bias;
            l.activation.apply_inplace(&mut z);
            a = z;
        }
        a.column(0).to_owned()
    }

    /// Mean squared error over the batch and its gradient with respect to all
    /// parameters.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> (f64, Gradients) {
        let n = x.nrows() as f64;
        // activations[i] is the input of layer i
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for l in &self.layers {
            let mut z = activations.last().expect("input present").dot(&l.weights) + &l.bias;
            l.activation.apply_inplace(&mut z);
            activations.push(z);
        }
        let pred = activations.pop().expect("output present");
        let residual = &pred.column(0) - &y;
        let loss = residual.iter().map(|r| r * r).sum::<f64>() / n;

        let mut delta = residual.mapv(|r| 2.0 * r / n).insert_axis(Axis(1));
        let mut gw = Vec::with_capacity(self.layers.len());
        let mut gb = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &activations[i];
            gw.push(input.t().dot(&delta));
            gb.push(delta.sum_axis(Axis(0)));
            if i > 0 {
                let mut back = delta.dot(&l.weights.t());
                // ReLU derivative, read off the stored post-activation values
                ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        (loss, Gradients { weights: gw, bias: gb })
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}
