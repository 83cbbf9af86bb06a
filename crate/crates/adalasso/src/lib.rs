//! Sparse linear regression and Gaussian graphical model selection via the
//! two-stage adaptive Lasso.
//!
//! The crate is organized around a weighted-Lasso coordinate descent solver
//! with exact KKT certification ([`solver`]), the two-stage adaptive pipeline
//! built on top of it ([`adaptive`]), design-condition diagnostics such as
//! restricted eigenvalues, restricted orthogonality and incoherence margins
//! ([`conditions`]), neighborhood-regression graph estimation ([`ggm`]),
//! synthetic data generators with known ground truth ([`synth`]), and a
//! reproducible Monte Carlo experiment harness ([`experiment`]).

pub mod adaptive;
pub mod conditions;
pub mod experiment;
pub mod ggm;
pub mod io;
pub(crate) mod linalg;
pub mod model;
pub mod solver;
pub mod synth;

mod error;

pub use error::{Error, Result};
pub use model::{Constants, Estimate, RegressionProblem, TrueModel, WeightVector};
