use std::path::PathBuf;

use surropt_core::dataset::{DatasetError, Metric};
use surropt_core::de::DeError;
use surropt_core::objective::ObjectiveError;
use surropt_core::stats::StatsError;
use surropt_core::surrogate::SurrogateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing model for {metric}: {path}")]
    MissingModel { metric: Metric, path: PathBuf },
    #[error("no surrogate trained successfully for {0}")]
    NoModel(Metric),
    #[error("unparsable trace files:\n  {}", .0.join("\n  "))]
    UnparsableTraces(Vec<String>),
    #[error("scenario {scenario}: need at least 2 variants with traces, found {found}")]
    TooFewRunSets { scenario: u32, found: usize },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    De(#[from] DeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invalid invocations, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
