//! Labeled layout samples: CSV ingestion, train/test splitting, normalization
//! and the synthetic stand-in for the simulation data set.

mod csv_io;
mod oracle;
mod split;

pub use csv_io::{load_csv, load_csv_dim, write_csv, DatasetMetadata};
pub use oracle::{
    gen_dataset, synthetic_oracle, Coupling, HeatSource, QuadraticForm, SyntheticOracle, SyntheticOracleConfig,
    ThermalModel,
};
pub use split::{split, DataSplit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("schema: missing column {0:?}")]
    MissingColumn(String),
    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("data set is empty")]
    Empty,
    #[error("need at least {needed} records, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("layout vector out of bounds at position {index}: {value}")]
    OutOfBounds { index: usize, value: f64 },
    #[error("non-finite value in record {row}")]
    NonFinite { row: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The three performance metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Control-path inductance.
    F1,
    /// Main-path inductance.
    F2,
    /// Maximum substrate temperature.
    F3,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::F2, Metric::F3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::F2 => "f2",
            Metric::F3 => "f3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One labeled layout: design vector plus its three metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub x: Vec<f64>,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl SampleRecord {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::F1 => self.f1,
            Metric::F2 => self.f2,
            Metric::F3 => self.f3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain([&self.f1, &self.f2, &self.f3])
            .all(|v| v.is_finite())
    }
}

/// Per-dimension input ranges and per-metric target moments, fitted on a
/// training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub f_mean: [f64; 3],
    /// Population standard deviation; zero marks a constant metric.
    pub f_std: [f64; 3],
}

impl NormalizationStats {
    pub fn fit(records: &[SampleRecord]) -> Result<Self, DatasetError> {
        let first = records.first().ok_or(DatasetError::Empty)?;
        let dim = first.x.len();
        let mut x_min = vec![f64::INFINITY; dim];
        let mut x_max = vec![f64::NEG_INFINITY; dim];
        for (row, r) in records.iter().enumerate() {
            if r.x.len() != dim {
                return Err(DatasetError::InvalidArgument(format!(
                    "record {row} has {} features, expected {dim}",
                    r.x.len()
                )));
            }
            if !r.is_finite() {
                return Err(DatasetError::NonFinite { row });
            }
            for (j, &v) in r.x.iter().enumerate() {
                x_min[j] = x_min[j].min(v);
                x_max[j] = x_max[j].max(v);
            }
        }
        let n = records.len() as f64;
        let mut f_mean = [0.0; 3];
        let mut f_std = [0.0; 3];
        for m in Metric::ALL {
            let mean = records.iter().map(|r| r.metric(m)).sum::<f64>() / n;
            let var = records.iter().map(|r| (r.metric(m) - mean).powi(2)).sum::<f64>() / n;
            f_mean[m.index()] = mean;
            f_std[m.index()] = var.sqrt();
        }
        Ok(Self {
            x_min,
            x_max,
            f_mean,
            f_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_min.len()
    }

    pub fn is_constant_metric(&self, m: Metric) -> bool {
        self.f_std[m.index()] == 0.0
    }

    /// Min-max scaling of a raw design vector to the unit box. Constant
    /// dimensions map to 0.
    pub fn normalize_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn denormalize_x(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .map(|(&v, (&lo, &hi))| lo + v * (hi - lo))
            .collect()
    }

    pub fn zscore(&self, m: Metric, value: f64) -> f64 {
        let sd = self.f_std[m.index()];
        let centered = value - self.f_mean[m.index()];
        if sd > 0.0 {
            centered / sd
        } else {
            centered
        }
    }

    pub fn unzscore(&self, m: Metric, z: f64) -> f64 {
        let sd = self.f_std[m.index()];
        self.f_mean[m.index()] + if sd > 0.0 { z * sd } else { z }
    }
}
