use sk_decay::harness::fit::fit_series;
use sk_decay::nonlinear_solver::{residual_ratio, simulate_damped_euler, SimulationConfig, Trajectory};
use sk_decay::system_model::DampedEuler;

fn exponents(traj: &Trajectory) -> (f64, f64) {
    let h = &traj.history;
    let fit = |name: &str| fit_series(&h.times, h.get(name).unwrap(), Some((20.0, 200.0))).unwrap().exponent;
    (fit("density-L2"), fit("momentum-L2"))
}

/// Halving the step and doubling the resolution moves the fitted exponents
/// by less than 0.02, and the quadratic residual stays proportional to
/// amplitude times gradient along the run.
#[test]
fn reference_run_is_resolved() {
    let cfg = SimulationConfig::reference_1d();
    let coarse = simulate_damped_euler(&cfg).unwrap();
    let fine_cfg = SimulationConfig { dt: cfg.dt / 2.0, resolution: 2 * cfg.resolution, ..cfg.clone() };
    let fine = simulate_damped_euler(&fine_cfg).unwrap();
    let (d0, m0) = exponents(&coarse);
    let (d1, m1) = exponents(&fine);
    assert!((d0 - d1).abs() < 0.02 && (m0 - m1).abs() < 0.02, "density {d0} vs {d1}, momentum {m0} vs {m1}");

    let model = DampedEuler::new(cfg.n, cfg.rest_density, cfg.gamma).unwrap();
    let ratios: Vec<f64> = coarse.snapshots.iter().map(|w| residual_ratio(&model, w).unwrap()).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    assert!(worst <= 2.0, "residual ratio {worst}");
    assert!(coarse.diagnostics.mass_drift < 1e-10);
    assert!(coarse.diagnostics.max_amplitude <= cfg.initial.amplitude * (1.0 + 1e-9));
}
