//! Theory comparisons and their CSV and text renderings.

use serde::{Deserialize, Serialize};

use super::fit::{fit_decay, DecayFit};
use super::fmt_num;
use super::predicted::{predicted_exponent, ClaimParams};
use crate::error::{Error, Result};
use crate::linear_solver::NormHistory;

/// Smallest coefficient of determination a passing fit may have.
pub const MIN_R_SQUARED: f64 = 0.98;

/// Measured decay exponent of one norm series set against a claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryComparison {
    pub quantity: String,
    pub claim: String,
    pub predicted: f64,
    pub fit: DecayFit,
    pub tolerance: f64,
    pub passed: bool,
}

impl TheoryComparison {
    pub fn new(quantity: &str, claim: &str, predicted: f64, fit: DecayFit, tolerance: f64) -> Self {
        let passed = (fit.exponent - predicted).abs() <= tolerance && fit.r_squared >= MIN_R_SQUARED;
        Self { quantity: quantity.into(), claim: claim.into(), predicted, fit, tolerance, passed }
    }

    pub fn deviation(&self) -> f64 {
        self.fit.exponent - self.predicted
    }
}

/// Fits `quantity` in `history` and compares with `claim`.
pub fn compare(
    history: &NormHistory,
    quantity: &str,
    claim: &str,
    params: &ClaimParams,
    window: Option<(f64, f64)>,
    tolerance: f64,
) -> Result<TheoryComparison> {
    let predicted = predicted_exponent(claim, params)?;
    let fit = fit_decay(history, quantity, window)?;
    Ok(TheoryComparison::new(quantity, claim, predicted, fit, tolerance))
}

const HEADER: &str = "quantity,claim,predicted,measured,deviation,tolerance,r_squared,prefactor,t0,t1,points,verdict";

pub fn comparisons_to_csv(rows: &[TheoryComparison]) -> String {
    let mut out = format!("{HEADER}\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.quantity,
            c.claim,
            fmt_num(c.predicted),
            fmt_num(c.fit.exponent),
            fmt_num(c.deviation()),
            fmt_num(c.tolerance),
            fmt_num(c.fit.r_squared),
            fmt_num(c.fit.prefactor),
            fmt_num(c.fit.t0),
            fmt_num(c.fit.t1),
            c.fit.points,
            if c.passed { "pass" } else { "fail" }
        ));
    }
    out
}

pub fn comparisons_from_csv(text: &str) -> Result<Vec<TheoryComparison>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(Error::Parse("unexpected comparison table header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 12 {
                return Err(Error::Parse(format!("line {}: expected 12 fields", i + 2)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)));
            let fit = DecayFit {
                t0: num(f[8])?,
                t1: num(f[9])?,
                exponent: num(f[3])?,
                prefactor: num(f[7])?,
                r_squared: num(f[6])?,
                points: f[10].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?,
            };
            Ok(TheoryComparison::new(f[0], f[1], num(f[2])?, fit, num(f[5])?))
        })
        .collect()
}

/// Human-readable verdict table.
pub fn summary(title: &str, rows: &[TheoryComparison]) -> String {
    let mut out = format!("{title}\n");
    for c in rows {
        out.push_str(&format!(
            "{:<4} {:<24} {:<22} measured {:+.4} predicted {:+.4} (tol {:.3}, R^2 {:.5}, window [{}, {}])\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.quantity,
            c.claim,
            c.fit.exponent,
            c.predicted,
            c.tolerance,
            c.fit.r_squared,
            c.fit.t0,
            c.fit.t1
        ));
    }
    let failed = rows.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} of {} verdicts passed\n", rows.len() - failed, rows.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(exponent: f64, r_squared: f64) -> DecayFit {
        DecayFit { t0: 10.0, t1: 100.0, exponent, prefactor: 2.0, r_squared, points: 20 }
    }

    #[test]
    fn verdict_rule() {
        assert!(TheoryComparison::new("L2", "critical-data", -0.5, fit(-0.54, 0.99), 0.05).passed);
        assert!(!TheoryComparison::new("L2", "critical-data", -0.5, fit(-0.56, 0.99), 0.05).passed);
        assert!(!TheoryComparison::new("L2", "critical-data", -0.5, fit(-0.5, 0.97), 0.05).passed);
    }

    #[test]
    fn csv_roundtrip_preserves_verdicts() {
        let rows = vec![
            TheoryComparison::new("L2", "critical-data", -0.25, fit(-0.2501234567, 0.999), 0.05),
            TheoryComparison::new("perp-L2", "critical-data", -0.75, fit(-0.9, 0.999), 0.07),
        ];
        let text = comparisons_to_csv(&rows);
        let back = comparisons_from_csv(&text).unwrap();
        assert_eq!(back.iter().map(|c| c.passed).collect::<Vec<_>>(), vec![true, false]);
        assert_eq!(comparisons_to_csv(&back), text);
    }

    #[test]
    fn compare_rejects_unknown_claims() {
        let mut h = NormHistory::new((1..=20).map(f64::from).collect());
        h.insert("L2", (1..=20).map(|t| 1.0 / f64::from(t)).collect());
        assert!(matches!(
            compare(&h, "L2", "nope", &ClaimParams::default(), None, 0.05),
            Err(Error::Input(_))
        ));
    }
}
