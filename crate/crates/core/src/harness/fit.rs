//! Least-squares fits of norm histories.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::linear_solver::NormHistory;

/// Power law `v ~ C (1 + t)^alpha` fitted on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t0: f64,
    pub t1: f64,
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Exponential law `v ~ C e^{-rate t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub t0: f64,
    pub t1: f64,
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// `(slope, intercept, r^2)` of an ordinary least-squares line.
fn line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Last decade of the sampled times, excluding the final 5%.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    let (first, last) = (times[0], times[times.len() - 1]);
    let t1 = first + 0.95 * (last - first);
    (t1 / 10.0, t1)
}

fn select(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return input("times and values differ in length");
    }
    let (t0, t1) = window;
    if !(t0 < t1) {
        return input(format!("empty fit window [{t0}, {t1}]"));
    }
    let picked: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if picked.len() < 8 {
        return input(format!("fit window [{t0}, {t1}] holds {} samples, need at least 8", picked.len()));
    }
    if let Some((t, v)) = picked.iter().find(|(_, v)| !(*v > 0.0)) {
        return input(format!("nonpositive value {v} at t = {t} inside the fit window"));
    }
    Ok(picked.into_iter().unzip())
}

/// Fits `log v = log C + alpha log(1 + t)` on the window.
pub fn fit_series(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if times.is_empty() {
        return input("empty series");
    }
    let window = window.unwrap_or_else(|| default_window(times));
    let (ts, vs) = select(times, values, window)?;
    let xs: Vec<f64> = ts.iter().map(|t| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = line(&xs, &ys);
    Ok(DecayFit {
        t0: window.0,
        t1: window.1,
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        points: ts.len(),
    })
}

pub fn fit_decay(history: &NormHistory, name: &str, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let values = history
        .get(name)
        .ok_or_else(|| crate::Error::Input(format!("no norm named `{name}` in history")))?;
    fit_series(&history.times, values, window)
}

/// Fits `log v = log C - rate t` on the window.
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExponentialFit> {
    let (ts, vs) = select(times, values, window)?;
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = line(&ts, &ys);
    Ok(ExponentialFit {
        t0: window.0,
        t1: window.1,
        rate: -slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        points: ts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn grid(count: usize, lo: f64, hi: f64) -> Vec<f64> {
        crate::spectral::log_radii(lo, hi, count)
    }

    #[test]
    fn exact_power_law() {
        let ts = grid(40, 1.0, 1e3);
        let vs: Vec<f64> = ts.iter().map(|t| 3.0 * (1.0 + t).powf(-0.75)).collect();
        let f = fit_series(&ts, &vs, Some((1.0, 1e3))).unwrap();
        assert!((f.exponent + 0.75).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-10);
    }

    #[test]
    fn perturbed_power_law() {
        let ts: Vec<f64> = (0..400).map(|k| 1.0 + k as f64 * 0.5).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(-0.5) * (1.0 + 0.01 * t.sin())).collect();
        let f = fit_series(&ts, &vs, None).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_windows() {
        let ts = grid(20, 1.0, 100.0);
        let mut vs: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        assert!(fit_series(&ts, &vs, Some((1.0, 2.0))).is_err());
        vs[10] = 0.0;
        assert!(fit_series(&ts, &vs, Some((1.0, 100.0))).is_err());
    }

    #[test]
    fn exponential_rate() {
        let ts: Vec<f64> = (0..50).map(|k| k as f64 * 0.2).collect();
        let vs: Vec<f64> = ts.iter().map(|t| 2.0 * (-0.7 * t).exp()).collect();
        let f = fit_exponential(&ts, &vs, (0.0, 10.0)).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-12 && f.r_squared > 0.999_999);
    }

    proptest! {
        #[test]
        fn scale_invariance(scale in 1e-3f64..1e3, alpha in -2.0f64..0.0) {
            let ts = grid(30, 1.0, 1e3);
            let vs: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(alpha) * (1.0 + 0.05 * t.ln().sin())).collect();
            let scaled: Vec<f64> = vs.iter().map(|v| v * scale).collect();
            let a = fit_series(&ts, &vs, Some((1.0, 1e3))).unwrap();
            let b = fit_series(&ts, &scaled, Some((1.0, 1e3))).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-10);
            prop_assert!((b.prefactor / a.prefactor / scale - 1.0).abs() < 1e-9);
        }

        #[test]
        fn subsampling_stability(stride in 1usize..5, alpha in -2.0f64..0.0) {
            let ts: Vec<f64> = (0..200).map(|k| 10.0 + k as f64).collect();
            let vs: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(alpha) * (1.0 + 0.002 * (t / 7.0).sin())).collect();
            let sub_t: Vec<f64> = ts.iter().step_by(stride).copied().collect();
            let sub_v: Vec<f64> = vs.iter().step_by(stride).copied().collect();
            let a = fit_series(&ts, &vs, Some((10.0, 209.0))).unwrap();
            let b = fit_series(&sub_t, &sub_v, Some((10.0, 209.0))).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 0.01);
        }
    }
}
