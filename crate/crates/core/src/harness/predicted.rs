//! Registered decay-rate claims and their predicted exponents.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::grid::Exponent;

/// Which part of the solution a norm measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    /// The whole perturbation.
    #[default]
    Full,
    /// The conserved (kernel) part, e.g. the density perturbation.
    Density,
    /// The dissipated part `(I - P) w`, e.g. the momentum.
    Momentum,
}

impl Component {
    /// Extra decay of the dissipated part.
    fn shift(self) -> f64 {
        match self {
            Component::Momentum => -0.5,
            _ => 0.0,
        }
    }
}

/// Parameters a claim may read; unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaimParams {
    pub n: usize,
    pub s: f64,
    pub ell: f64,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub k: f64,
    pub component: Component,
}

impl Default for ClaimParams {
    fn default() -> Self {
        Self { n: 1, s: 0.0, ell: 0.0, sigma: 0.0, p: 1.0, q: 2.0, k: 0.0, component: Component::Full }
    }
}

/// Registered claim identifiers.
pub const CLAIMS: &[(&str, &str)] = &[
    ("critical-data", "-(s + ell)/2 for data in the homogeneous negative Besov space B^{-s}_{2,inf}"),
    ("damped-linear", "-s/2 for the linearized damped system"),
    ("hyperbolic-parabolic", "-s/2 for hyperbolic-parabolic systems"),
    ("homogeneous-besov", "-(sigma + s)/2 for the homogeneous B^sigma_{2,1} norm"),
    ("lp-data", "-gamma_{p,2} - ell/2 for L^p data"),
    ("lp-lq", "-gamma_{p,q} - k/2 for L^p data measured in L^q"),
];

/// Heat-kernel rate `gamma_{p,q} = (n/2)(1/p - 1/q)`.
pub fn gamma(n: usize, p: f64, q: f64) -> Result<f64> {
    let rp = Exponent::from_f64(p)?.reciprocal();
    let rq = Exponent::from_f64(q)?.reciprocal();
    Ok(0.5 * n as f64 * (rp - rq))
}

/// Exponent `alpha` in `||.|| ~ (1 + t)^alpha` predicted by a claim.
pub fn predicted_exponent(claim: &str, params: &ClaimParams) -> Result<f64> {
    let base = match claim {
        "critical-data" => -(params.s + params.ell) / 2.0,
        "damped-linear" | "hyperbolic-parabolic" => -params.s / 2.0,
        "homogeneous-besov" => -(params.sigma + params.s) / 2.0,
        "lp-data" => -gamma(params.n, params.p, 2.0)? - params.ell / 2.0,
        "lp-lq" => -gamma(params.n, params.p, params.q)? - params.k / 2.0,
        other => return input(format!("unknown claim id `{other}`")),
    };
    Ok(base + params.component.shift())
}

pub fn is_registered(claim: &str) -> bool {
    CLAIMS.iter().any(|(id, _)| *id == claim)
}
