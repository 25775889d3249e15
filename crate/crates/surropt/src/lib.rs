//! Experiment orchestration for surrogate-assisted layout optimization:
//! synthetic data generation, the surrogate architecture sweep, the
//! two-scenario DE campaign, pairwise statistics and a bundle report.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use config::ExperimentConfig;
pub use error::{ExperimentError, Result};
