//! Numerical laboratory for dissipative hyperbolic balance laws: structural
//! checks, per-frequency spectral analysis, Littlewood-Paley and Besov
//! norms, linear and nonlinear solvers, and decay-rate measurement.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod lp_besov;
pub mod linear_solver;
pub mod nonlinear_solver;
pub mod spectral;
pub mod system_model;

pub use error::{Error, Result};
pub use grid::{Exponent, Grid, GridField};
