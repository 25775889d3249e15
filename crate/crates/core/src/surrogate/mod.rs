//! Dense feedforward regressors mapping a layout vector to one metric.
//!
//! One [`DenseNetwork`] is trained per metric. Hidden layers use ReLU and the
//! single output unit is linear. Targets are z-scored before training, so a
//! network's raw output lives on the normalized scale; [`SurrogateModel`]
//! carries the statistics needed to map back to simulation units.

mod model;
mod network;
mod spec;
mod train;

pub use model::{SurrogateModel, MODEL_FORMAT_VERSION};
pub use network::{Activation, DenseLayer, DenseNetwork, Gradients};
pub use spec::{table1_spec, table1_specs, NetworkSpec};
pub use train::{fit_surrogate, mse, train, RegressionData, TrainingConfig, TrainingReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite input at position {0}")]
    NonFiniteInput(usize),
    #[error("empty data set")]
    EmptyData,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
