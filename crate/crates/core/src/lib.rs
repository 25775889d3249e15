//! Surrogate-assisted layout optimization for power modules.
//!
//! The crate is organized around the two halves of the workflow:
//!
//! - [`surrogate`] and [`dataset`]: learn one dense feedforward regressor per
//!   performance metric (control-path inductance, main-path inductance,
//!   maximum substrate temperature) from 36-dimensional layout vectors.
//! - [`objective`], [`de`] and [`stats`]: minimize a weighted sum of the
//!   learned surrogates with ten Differential Evolution variants and compare
//!   the variants with Wilcoxon rank-sum tests.

pub mod dataset;
pub mod de;
pub mod objective;
pub mod rng;
pub mod stats;
pub mod surrogate;

/// Number of layout design variables.
pub const LAYOUT_DIM: usize = 36;
