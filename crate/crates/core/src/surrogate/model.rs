//! Trained surrogate plus the normalization needed to use it, and its on-disk
//! format.
//!
//! Layout of a model file (all integers little endian):
//!
//! ```text
//! magic      4 bytes   "SRGT"
//! version    u32
//! header_len u64
//! header     header_len bytes of JSON (metric, spec, layer shapes, scaling)
//! params     f64 x parameter_count, layer by layer, weights row-major then bias
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, DenseNetwork, NetworkSpec, SurrogateError};
use crate::dataset::{Metric, NormalizationStats};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SRGT";

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub network: DenseNetwork,
    pub metric: Metric,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

#[derive(Serialize, Deserialize)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    metric: Metric,
    spec: NetworkSpec,
    input_dim: usize,
    layers: Vec<LayerShape>,
    x_min: Vec<f64>,
    x_max: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    parameter_count: usize,
}

impl SurrogateModel {
    pub fn new(network: DenseNetwork, metric: Metric, stats: &NormalizationStats) -> Result<Self, SurrogateError> {
        if stats.dim() != network.input_dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: network.input_dim(),
                actual: stats.dim(),
            });
        }
        Ok(Self {
            network,
            metric,
            x_min: stats.x_min.clone(),
            x_max: stats.x_max.clone(),
            target_mean: stats.f_mean[metric.index()],
            target_std: stats.f_std[metric.index()],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    /// Network output for a unit-box layout, on the z-scored target scale.
    pub fn predict_normalized(&self, u: &[f64]) -> Result<f64, SurrogateError> {
        self.network.forward(u)
    }

    /// Prediction in simulation units for a raw (unnormalized) layout.
    pub fn predict(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        if x.len() != self.input_dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let u: Vec<f64> = x
            .iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect();
        let z = self.network.forward(&u)?;
        Ok(self.target_mean + if self.target_std > 0.0 { z * self.target_std } else { z })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SurrogateError> {
        let header = Header {
            format: "surropt-surrogate".into(),
            metric: self.metric,
            spec: self.network.spec(),
            input_dim: self.network.input_dim(),
            layers: self
                .network
                .layers()
                .iter()
                .map(|l| LayerShape {
                    fan_in: l.fan_in(),
                    fan_out: l.fan_out(),
                    activation: l.activation,
                })
                .collect(),
            x_min: self.x_min.clone(),
            x_max: self.x_max.clone(),
            target_mean: self.target_mean,
            target_std: self.target_std,
            parameter_count: self.network.parameter_count(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| SurrogateError::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + json.len() + 8 * header.parameter_count);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in self.network.parameters() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SurrogateError> {
        let fmt = |m: &str| SurrogateError::Format(m.to_string());
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(fmt("not a surrogate model file"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != MODEL_FORMAT_VERSION {
            return Err(SurrogateError::Format(format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + header_len).ok_or_else(|| fmt("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| SurrogateError::Format(e.to_string()))?;

        let raw = &bytes[16 + header_len..];
        if raw.len() != 8 * header.parameter_count {
            return Err(SurrogateError::Format(format!(
                "expected {} parameters, found {} bytes",
                header.parameter_count,
                raw.len()
            )));
        }
        let mut values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut layers = Vec::with_capacity(header.layers.len());
        for s in &header.layers {
            let weights: Vec<f64> = values.by_ref().take(s.fan_in * s.fan_out).collect();
            let bias: Vec<f64> = values.by_ref().take(s.fan_out).collect();
            let weights = Array2::from_shape_vec((s.fan_in, s.fan_out), weights)
                .map_err(|e| SurrogateError::Format(e.to_string()))?;
            layers.push(DenseLayer {
                weights,
                bias: Array1::from(bias),
                activation: s.activation,
            });
        }
        let network = DenseNetwork::from_layers(header.input_dim, layers)
            .map_err(|e| SurrogateError::Format(e.to_string()))?
            .with_table_index(header.spec.table_index);
        if network.spec().hidden_widths != header.spec.hidden_widths {
            return Err(fmt("layer shapes disagree with spec"));
        }
        Ok(Self {
            network,
            metric: header.metric,
            x_min: header.x_min,
            x_max: header.x_max,
            target_mean: header.target_mean,
            target_std: header.target_std,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SurrogateError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SurrogateError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
