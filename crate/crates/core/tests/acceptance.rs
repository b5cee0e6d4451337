//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! against the budget. Runs without the libtest harness so that the lines
//! are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

mod common;

use common::{euler_1d_mode, log_times};

use sk_decay::harness::fit::fit_series;
use sk_decay::harness::inequalities::{littlewood_paley_suite, lyapunov_suite, negative_besov_monotonicity, SuiteOptions};
use sk_decay::linear_solver::{solve_linear_radial, RadialInitialData, RadialNorm};
use sk_decay::nonlinear_solver::{simulate_damped_euler, time_weighted_functionals, SimulationConfig};
use sk_decay::spectral::{
    build_compensating_matrix, check_sk_kernel, direction_samples, log_radii, random_directions, spectral_gap_fit,
    SynthesisOptions,
};
use sk_decay::system_model::{builtin_system, euler_system_with_speed, hyperbolic_parabolic_test_system};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

/// `( int |xi|^{2l} |e^{t Phi} w0^(xi)|^2 dxi )^{1/2}` for the profile
/// `|xi|^{s - 1/2} e^{-xi^2}`, by the trapezoid rule in `ln |xi|` over
/// `[1e-14, 12]`, both signs of `xi`.
fn oracle_norm(s: f64, ell: f64, t: f64, v: [f64; 2], perp: bool) -> f64 {
    let (a, b) = (1e-14f64.ln(), 12f64.ln());
    let m = 40_000;
    let h = (b - a) / m as f64;
    let mut sum = 0.0;
    for k in 0..=m {
        let r = (a + h * k as f64).exp();
        let prof = r.powf(s - 0.5) * (-r * r).exp();
        let mut f = 0.0;
        for sign in [1.0, -1.0] {
            let w = euler_1d_mode(sign * r, t, v);
            f += if perp { w[1].norm_sqr() } else { w[0].norm_sqr() + w[1].norm_sqr() };
        }
        let wgt = if k == 0 || k == m { 0.5 } else { 1.0 };
        sum += wgt * h * r * r.powf(2.0 * ell) * prof * prof * f;
    }
    sum.sqrt()
}

fn sk_certification() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [1, 3] {
        let sys = euler_system_with_speed(n, 1.0)?;
        let mut omegas = direction_samples(n);
        if n > 1 {
            omegas.extend(random_directions(n, 64, 11));
        }
        let kernel = check_sk_kernel(&sys, &omegas)?;
        let gap = spectral_gap_fit(&sys, &log_radii(1e-2, 1e2, 41), &omegas)?;
        ok &= kernel.passed && gap.passed && gap.c_star > 0.0;
        notes.push(format!("{n}D separation {:.3}, c* {:.4}", kernel.min_separation, gap.c_star));
    }
    let dec = check_sk_kernel(&builtin_system("decoupled")?, &direction_samples(1))?;
    let witness = dec.witness.as_ref().map(|w| w.vector.clone()).unwrap_or_default();
    let expected = [1.0, 0.0];
    let witness_ok = !dec.passed && witness.len() == 2 && witness.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-10);
    notes.push(format!("decoupled witness {witness:?}"));
    Ok((ok && witness_ok, notes.join("; ")))
}

fn spectral_gap_value() -> Outcome {
    let radii = log_radii(1e-2, 1e2, 41);
    let rep = spectral_gap_fit(&euler_system_with_speed(1, 1.0)?, &radii, &direction_samples(1))?;
    // Largest real part is (-1 + sqrt(1 - 4 r^2)) / 2 below r = 1/2 and -1/2 above.
    let oracle = radii
        .iter()
        .map(|&r| {
            let re = if 2.0 * r < 1.0 { (-1.0 + (1.0 - 4.0 * r * r).sqrt()) / 2.0 } else { -0.5 };
            -re * (1.0 + r * r) / (r * r)
        })
        .fold(f64::INFINITY, f64::min);
    let ok = (0.45..=0.51).contains(&rep.c_star) && (rep.c_star - oracle).abs() < 1e-8;
    Ok((ok, format!("c* = {:.6}, closed form on the same grid {oracle:.6}", rep.c_star)))
}

fn synthesis() -> Outcome {
    let sys = euler_system_with_speed(1, 1.0)?;
    let opts = SynthesisOptions::default();
    let k = build_compensating_matrix(&sys, &[1.0], &opts)?;
    let neg = build_compensating_matrix(&sys, &[-1.0], &opts)?;
    let ka = &k.k * sys.flux_symbol(&[1.0]);
    let sym = (&ka + ka.transpose()) * 0.5 + sys.damping();
    let lam = sym.symmetric_eigenvalues().min();
    let ka0 = &k.k * sys.a0();
    let skew = (&ka0 + ka0.transpose()).amax();
    let odd = neg.k == -k.k.clone();
    let ok = lam >= 0.4 && skew <= 1e-10 && odd;
    Ok((ok, format!("lambda_min {lam:.5} (reported {:.5}), |K A0 + (K A0)^T| {skew:.1e}, odd {odd}", k.achieved_min_eig)))
}

fn linear_decay() -> Outcome {
    let sys = euler_system_with_speed(1, 1.0)?;
    let times = log_times(1.0, 1e4, 61);
    let mut ok = true;
    let mut notes = Vec::new();
    for (s, ell) in [(0.5, 0.0), (1.0, 0.0), (0.5, 1.0)] {
        let data = RadialInitialData::new(1, s, 1.0, vec![1.0, 1.0])?;
        let hist = solve_linear_radial(&sys, &data, &times, &[RadialNorm::Lambda(ell)])?;
        let values = hist.get(&RadialNorm::Lambda(ell).name()).expect("requested norm").to_vec();
        let mut worst_rel = 0.0f64;
        for k in [0, 30, 60] {
            let o = oracle_norm(s, ell, times[k], [1.0, 1.0], false);
            worst_rel = worst_rel.max((values[k] - o).abs() / o);
        }
        let fit = fit_series(&times, &values, Some((1e2, 1e4)))?;
        let predicted = -(s + ell) / 2.0;
        let pass = (fit.exponent - predicted).abs() <= 0.05 && fit.r_squared >= 0.99 && worst_rel < 1e-4;
        ok &= pass;
        notes.push(format!("(s,l)=({s},{ell}) {:+.4} vs {predicted:+.3} R^2 {:.5} oracle {worst_rel:.1e}", fit.exponent, fit.r_squared));
    }
    Ok((ok, notes.join("; ")))
}

fn orthogonal_part() -> Outcome {
    let sys = euler_system_with_speed(1, 1.0)?;
    let times = log_times(1.0, 1e4, 61);
    let data = RadialInitialData::new(1, 0.5, 1.0, vec![1.0, 1.0])?;
    let hist = solve_linear_radial(&sys, &data, &times, &[RadialNorm::LambdaPerp(0.0)])?;
    let values = hist.get("perp-L2").expect("requested norm").to_vec();
    let o = oracle_norm(0.5, 0.0, times[60], [1.0, 1.0], true);
    let rel = (values[60] - o).abs() / o;
    let fit = fit_series(&times, &values, Some((1e2, 1e4)))?;
    let ok = (fit.exponent + 0.75).abs() <= 0.07 && rel < 1e-4;
    Ok((ok, format!("{:+.4} vs -0.750, R^2 {:.5}, oracle {rel:.1e}", fit.exponent, fit.r_squared)))
}

fn euler_3d() -> Outcome {
    let sys = euler_system_with_speed(3, 1.0)?;
    let times = log_times(1.0, 1e4, 61);
    let data = RadialInitialData::new(3, 1.5, 1.0, vec![1.0; 4])?;
    let hist = solve_linear_radial(&sys, &data, &times, &[RadialNorm::Lambda(0.0), RadialNorm::LambdaPerp(0.0)])?;
    let dens = fit_series(&times, hist.get("L2").expect("requested"), Some((1e2, 1e4)))?;
    let mom = fit_series(&times, hist.get("perp-L2").expect("requested"), Some((1e2, 1e4)))?;
    let ok = (dens.exponent + 0.75).abs() <= 0.05 && (mom.exponent + 1.25).abs() <= 0.07;
    Ok((ok, format!("density {:+.4} vs -0.75, momentum {:+.4} vs -1.25", dens.exponent, mom.exponent)))
}

fn nonlinear_1d() -> Outcome {
    let cfg = SimulationConfig::reference_1d();
    let traj = simulate_damped_euler(&cfg)?;
    let h = &traj.history;
    let dens = fit_series(&h.times, h.get("density-L2").expect("series"), Some((20.0, 200.0)))?;
    let mom = fit_series(&h.times, h.get("momentum-L2").expect("series"), Some((20.0, 200.0)))?;
    let f = time_weighted_functionals(&traj, cfg.s, cfg.sigma_c(), &cfg.ell_grid())?;
    let (e1, e2) = (f.get("E1").expect("E1"), f.get("E2").expect("E2"));
    let i1 = f.times.iter().position(|&t| (t - 1.0).abs() < 1e-9).ok_or("no sample at t = 1")?;
    let at_one = e1[i1] + e2[i1];
    let peak = e1.iter().zip(e2).map(|(a, b)| a + b).fold(0.0, f64::max);
    let ratio = peak / at_one;
    let ok = (dens.exponent + 0.25).abs() <= 0.1 && (mom.exponent + 0.75).abs() <= 0.12 && ratio <= 10.0;
    Ok((
        ok,
        format!(
            "density {:+.4}, momentum {:+.4}, max(E1+E2)/(E1+E2)(1) = {ratio:.3}, mass drift {:.1e}",
            dens.exponent, mom.exponent, traj.diagnostics.mass_drift
        ),
    ))
}

fn negative_besov() -> Outcome {
    let c = negative_besov_monotonicity(&SuiteOptions::default(), 20, 0.5, 10.0)?;
    Ok((c.passed, c.detail))
}

fn lp_suite() -> Outcome {
    let checks = littlewood_paley_suite(&SuiteOptions::default())?;
    let ok = checks.iter().all(|c| c.passed);
    let detail = checks.iter().map(|c| format!("{} {}", c.name, if c.passed { "ok" } else { "FAILED" })).collect::<Vec<_>>();
    Ok((ok, detail.join(", ")))
}

fn lyapunov() -> Outcome {
    let c = lyapunov_suite(&SuiteOptions::default())?;
    Ok((c.passed, c.detail))
}

fn hyperbolic_parabolic() -> Outcome {
    let sys = hyperbolic_parabolic_test_system()?;
    let times = log_times(1.0, 1e4, 61);
    let data = RadialInitialData::new(1, 1.0, 1.0, vec![1.0, 1.0])?;
    let hist = solve_linear_radial(&sys, &data, &times, &[RadialNorm::Lambda(0.0)])?;
    let fit = fit_series(&times, hist.get("L2").expect("requested"), Some((1e2, 1e4)))?;
    let ok = (fit.exponent + 0.5).abs() <= 0.05;
    Ok((ok, format!("{:+.4} vs -0.5, R^2 {:.5}", fit.exponent, fit.r_squared)))
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, title: "SK certification", budget: secs(5), run: sk_certification },
        Criterion { id: 2, title: "spectral gap value", budget: secs(5), run: spectral_gap_value },
        Criterion { id: 3, title: "compensating-matrix synthesis", budget: secs(10), run: synthesis },
        Criterion { id: 4, title: "linear whole-space decay", budget: secs(120), run: linear_decay },
        Criterion { id: 5, title: "orthogonal-part acceleration", budget: secs(60), run: orthogonal_part },
        Criterion { id: 6, title: "3D Euler linear rates", budget: secs(300), run: euler_3d },
        Criterion { id: 7, title: "nonlinear 1D damped Euler", budget: secs(600), run: nonlinear_1d },
        Criterion { id: 8, title: "negative Besov norm nonincreasing", budget: secs(30), run: negative_besov },
        Criterion { id: 9, title: "harmonic-analysis suite", budget: secs(60), run: lp_suite },
        Criterion { id: 10, title: "per-mode Lyapunov inequality", budget: secs(30), run: lyapunov },
        Criterion { id: 11, title: "hyperbolic-parabolic decay", budget: secs(60), run: hyperbolic_parabolic },
    ]
}

fn main() -> ExitCode {
    let mut failed = 0;
    for c in criteria() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok((p, d)) => (p && elapsed <= c.budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {}: {detail} [{:.1} s of {} s]",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
