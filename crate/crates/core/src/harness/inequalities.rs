//! Sampled checks of the harmonic-analysis inequalities and of the
//! per-mode Lyapunov decay.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::experiment::Check;
use crate::error::Result;
use crate::grid::{Exponent, Grid, GridField};
use crate::linalg::C64;
use crate::linear_solver::solve_linear_grid;
use crate::lp_besov::{
    bernstein_ratio, gns_check, lp_embedding_check, random_band_limited, verify_interpolation_suite, BesovSpec,
    DyadicPartition, ANNULUS_HI, ANNULUS_LO,
};
use crate::spectral::{direction_samples, lyapunov_defect, lyapunov_family, SynthesisOptions};
use crate::system_model::euler_system_with_speed;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    /// Band-limited samples for the Littlewood-Paley checks.
    pub samples: usize,
    /// Points of the 1D periodic grid.
    pub resolution: usize,
    /// Sampled `(xi, w0, t)` triples for the Lyapunov check.
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { samples: 100, resolution: 256, trajectories: 200, seed: 0 }
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

/// Partition, reconstruction, Bernstein, interpolation, Gagliardo-Nirenberg
/// and embedding checks on random band-limited fields.
pub fn littlewood_paley_suite(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let grid = Grid::cube(1, opts.resolution, 2.0 * PI)?;
    let part = DyadicPartition::new(&grid)?;
    let top = 0.45 * opts.resolution as f64;
    let samples: Vec<GridField> = (0..opts.samples as u64)
        .map(|k| random_band_limited(&grid, 1, 1.0, top, opts.seed.wrapping_add(k)))
        .collect();
    let mut out = Vec::new();

    let unity = part.unity_defect();
    out.push(check("partition-of-unity", unity < 1e-10, format!("max |sum_q phi_q - 1| = {unity:.3e}")));

    let mut recon = 0.0f64;
    for f in &samples {
        let mut sum = GridField::zeros(grid.clone(), 1);
        for q in part.indices(false) {
            sum = sum.add(&part.block(f, q, false)?)?;
        }
        recon = recon.max(sum.sub(f)?.l2_norm() / f.l2_norm());
    }
    out.push(check("block-reconstruction", recon < 1e-8, format!("max relative error {recon:.3e}")));

    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for f in &samples {
        for q in part.blocks() {
            if let Some(r) = bernstein_ratio(&part, f, q)? {
                let scaled = r / 2f64.powi(q);
                lo = lo.min(scaled);
                hi = hi.max(scaled);
            }
        }
    }
    out.push(check(
        "bernstein",
        lo >= ANNULUS_LO - 1e-12 && hi <= ANNULUS_HI + 1e-12,
        format!("2^-q ||Lambda Delta_q f|| / ||Delta_q f|| in [{lo:.4}, {hi:.4}]"),
    ));

    let interp = verify_interpolation_suite(&samples, 0.5, 1.0, 0.5)?;
    out.push(check(
        "interpolation-dilation",
        interp.dilation_defect < 1e-6 && interp.samples == samples.len(),
        format!("ratios in [{:.4}, {:.4}], dilation defect {:.3e}", interp.min_ratio, interp.max_ratio, interp.dilation_defect),
    ));

    let gns = gns_check(&samples, 0.0, Exponent::Inf, 0.0, 1.0, Exponent::Two)?;
    out.push(check(
        "gagliardo-nirenberg-dilation",
        gns.dilation_defect < 1e-6 && gns.samples == samples.len(),
        format!("ratios in [{:.4}, {:.4}], dilation defect {:.3e}", gns.min_ratio, gns.max_ratio, gns.dilation_defect),
    ));

    let emb = lp_embedding_check(&samples, Exponent::One)?;
    out.push(check(
        "embedding-per-block",
        emb.per_block_holds(),
        format!("max ||Delta_q f||_2 / (C_q ||f||_1) = {:.4}", emb.worst_block),
    ));
    Ok(out)
}

/// Negative-index Besov norm is nonincreasing under the linear Euler flow.
pub fn negative_besov_monotonicity(opts: &SuiteOptions, fields: usize, s: f64, t: f64) -> Result<Check> {
    let sys = euler_system_with_speed(1, 1.0)?;
    let grid = Grid::cube(1, opts.resolution, 64.0 * PI)?;
    let part = DyadicPartition::new(&grid)?;
    let spec = BesovSpec::homogeneous(-s, Exponent::Two, Exponent::Inf);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..fields as u64 {
        let w0 = random_band_limited(&grid, 2, 0.05, 10.0, opts.seed.wrapping_add(1000 + k));
        let w = solve_linear_grid(&sys, &w0, t)?;
        worst = worst.max(part.besov_norm(&w, &spec)? - part.besov_norm(&w0, &spec)?);
    }
    Ok(check(
        "negative-besov-nonincreasing",
        worst <= 1e-8,
        format!("max (norm(t) - norm(0)) = {worst:.3e}"),
    ))
}

/// Finite-difference Lyapunov inequality along sampled 1D Euler modes.
pub fn lyapunov_suite(opts: &SuiteOptions) -> Result<Check> {
    let sys = euler_system_with_speed(1, 1.0)?;
    let omegas = direction_samples(1);
    let family = lyapunov_family(&sys, &omegas, &SynthesisOptions { seed: opts.seed, ..Default::default() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.trajectories {
        let r = 10f64.powf(rng.gen_range(-2.0..2.0));
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let w0 = DVector::from_fn(sys.size(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let t = rng.gen_range(0.0..5.0);
        worst = worst.max(lyapunov_defect(&sys, &[sign * r], &w0, &family, t)?);
    }
    Ok(check(
        "lyapunov-inequality",
        worst <= 1e-6,
        format!("max (dE/dt + (c1 kappa/2) rho |w|^2) / |w|^2 = {worst:.3e} (kappa {:.4}, c1 {:.4})", family.kappa, family.c1),
    ))
}

/// Every check of the suite.
pub fn verify_inequalities(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut out = littlewood_paley_suite(opts)?;
    out.push(negative_besov_monotonicity(opts, 20, 0.5, 10.0)?);
    out.push(lyapunov_suite(opts)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let opts = SuiteOptions { samples: 6, resolution: 128, trajectories: 20, seed: 4 };
        for c in verify_inequalities(&opts).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
