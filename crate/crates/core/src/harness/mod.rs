//! Decay fitting, theory comparison and report emission.

pub mod experiment;
pub mod fit;
pub mod inequalities;
pub mod predicted;
pub mod report;
pub mod svg;

pub use fit::{default_window, fit_decay, fit_exponential, fit_series, DecayFit, ExponentialFit};
pub use predicted::{gamma, is_registered, predicted_exponent, ClaimParams, Component, CLAIMS};
pub use report::{compare, TheoryComparison};

/// Formats a number with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}
