//! Closed-form oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::Complex;

pub type C = Complex<f64>;

pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect()
}

/// `e^{t Phi(xi)} v` for linear 1D Euler with unit speed, where
/// `Phi = [[0, -i xi], [-i xi, -1]]`, by the two-eigenvalue formula.
pub fn euler_1d_mode(xi: f64, t: f64, v: [f64; 2]) -> [C; 2] {
    let i = C::new(0.0, 1.0);
    let phi = [[C::new(0.0, 0.0), -i * xi], [-i * xi, C::new(-1.0, 0.0)]];
    let disc = C::new(1.0 - 4.0 * xi * xi, 0.0).sqrt();
    let (l1, l2) = ((C::new(-1.0, 0.0) + disc) / 2.0, (C::new(-1.0, 0.0) - disc) / 2.0);
    let (alpha, beta) = if (l1 - l2).norm() < 1e-6 {
        let l = (l1 + l2) / 2.0;
        let e = (l * t).exp();
        (e * (C::new(1.0, 0.0) - l * t), e * t)
    } else {
        let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
        ((l1 * e2 - l2 * e1) / (l1 - l2), (e1 - e2) / (l1 - l2))
    };
    let mut out = [C::new(0.0, 0.0); 2];
    for (r, o) in out.iter_mut().enumerate() {
        *o = alpha * v[r] + beta * (phi[r][0] * v[0] + phi[r][1] * v[1]);
    }
    out
}

