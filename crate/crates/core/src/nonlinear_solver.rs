//! Pseudospectral simulation of the damped Euler equations in normal-form
//! variables, time-weighted Besov functionals along a trajectory, and the
//! dissipated-part projection.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::grid::{Exponent, Grid, GridField};
use crate::linalg::{RMat, C64};
use crate::linear_solver::{ExponentialStepper, NormHistory, Scheme};
use crate::lp_besov::{BesovSpec, DyadicPartition};
use crate::system_model::{euler_normal_form_rhs, DampedEuler, NonlinearModel};

/// Largest admissible `dt * c * k_max`.
pub const CFL_BOUND: f64 = 0.5;

/// Spectral shape of the initial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// Density modes `|k|^{s - n/2} exp(-(|k|/cutoff)^2)` with random phases.
    Power { cutoff: f64 },
    /// Smooth compactly supported density bump of the given radius, centred
    /// in the box.
    Bump { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    /// Sup norm `epsilon` of the perturbation.
    pub amplitude: f64,
    pub envelope: Envelope,
    #[serde(default)]
    pub seed: u64,
    /// First velocity component set to `velocity_ratio * a`; `1` gives an
    /// approximately right-moving wave in 1D.
    #[serde(default)]
    pub velocity_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dealias {
    /// Keep modes with `|index| <= M/3` on every axis.
    TwoThirds,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: String,
    pub n: usize,
    pub resolution: usize,
    pub box_length: f64,
    pub rest_density: f64,
    pub gamma: f64,
    pub initial: InitialData,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_dealias")]
    pub dealias: Dealias,
    /// Sample times; each must be a multiple of `dt` in `[0, t_final]`.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    /// Derivative indices for the time-weighted functionals; defaults to
    /// `{0, 0.25, ..., sigma_c - 1}`.
    #[serde(default)]
    pub ell_grid: Option<Vec<f64>>,
    /// Low-frequency index of the data.
    pub s: f64,
}

fn default_scheme() -> Scheme {
    Scheme::ExponentialMidpoint
}

fn default_dealias() -> Dealias {
    Dealias::TwoThirds
}

impl SimulationConfig {
    /// The 1D small-data run: box `400 pi`, 8192 points, `epsilon = 1e-2`.
    pub fn reference_1d() -> Self {
        let dt = 0.02;
        let t_final = 200.0;
        Self {
            model: "damped-euler".into(),
            n: 1,
            resolution: 8192,
            box_length: 400.0 * PI,
            rest_density: 0.5,
            gamma: 2.0,
            initial: InitialData { amplitude: 1e-2, envelope: Envelope::Power { cutoff: 1.0 }, seed: 7, velocity_ratio: 0.0 },
            dt,
            t_final,
            scheme: Scheme::ExponentialMidpoint,
            dealias: Dealias::TwoThirds,
            sample_times: default_sample_times(dt, t_final, 60),
            ell_grid: None,
            s: 0.5,
        }
    }

    pub fn sigma_c(&self) -> f64 {
        1.0 + self.n as f64 / 2.0
    }

    pub fn ell_grid(&self) -> Vec<f64> {
        self.ell_grid.clone().unwrap_or_else(|| default_ell_grid(self.sigma_c()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::cube(self.n, self.resolution, self.box_length)
    }

    pub fn model(&self) -> Result<DampedEuler> {
        if self.model != "damped-euler" {
            return input(format!("unknown nonlinear model `{}`", self.model));
        }
        DampedEuler::new(self.n, self.rest_density, self.gamma)
    }

    /// Largest wavenumber carried by the dealiased state.
    pub fn k_max(&self) -> Result<f64> {
        let grid = self.grid()?;
        Ok(match self.dealias {
            Dealias::TwoThirds => grid.max_radius() * (self.resolution / 3) as f64 / (self.resolution / 2) as f64,
            Dealias::None => grid.max_radius(),
        })
    }

    /// Step indices of the sample times.
    pub fn sample_steps(&self) -> Result<Vec<usize>> {
        let mut steps = Vec::with_capacity(self.sample_times.len());
        for &t in &self.sample_times {
            if !(0.0..=self.t_final * (1.0 + 1e-12)).contains(&t) {
                return input(format!("sample time {t} lies outside [0, {}]", self.t_final));
            }
            let k = (t / self.dt).round();
            if (k * self.dt - t).abs() > 1e-9 * t.max(1.0) {
                return input(format!("sample time {t} is not a multiple of dt = {}", self.dt));
            }
            steps.push(k as usize);
        }
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return input("sample times must be strictly increasing");
        }
        Ok(steps)
    }

    pub fn check(&self) -> Result<()> {
        let model = self.model()?;
        if !(self.dt > 0.0 && self.t_final > 0.0 && self.dt <= self.t_final) {
            return input("need 0 < dt <= t_final");
        }
        if !(self.s > 0.0) {
            return input("the low-frequency index s must be positive");
        }
        let cfl = self.dt * model.sound_speed() * self.k_max()?;
        if cfl > CFL_BOUND {
            return input(format!("dt * c * k_max = {cfl:.3} exceeds the bound {CFL_BOUND}"));
        }
        let eps = self.initial.amplitude;
        if !(eps >= 0.0) || eps >= DampedEuler::ADMISSIBLE * model.sound_speed() {
            return input(format!("amplitude {eps} is outside the admissible set"));
        }
        match self.initial.envelope {
            Envelope::Power { cutoff } if !(cutoff > 0.0) => return input("envelope cutoff must be positive"),
            Envelope::Bump { radius } if !(radius > 0.0 && 2.0 * radius < self.box_length) => {
                return input("bump radius must be positive and fit in the box")
            }
            _ => {}
        }
        check_ell_grid(&self.ell_grid(), self.sigma_c())?;
        if self.sample_times.is_empty() {
            return input("at least one sample time is required");
        }
        self.sample_steps()?;
        Ok(())
    }
}

/// `0`, `1`, then `count - 2` log-spaced times up to `t_final`, snapped to
/// multiples of `dt`.
pub fn default_sample_times(dt: f64, t_final: f64, count: usize) -> Vec<f64> {
    let last = (t_final / dt).round() as usize;
    let first = (1.0 / dt).round().max(1.0) as usize;
    let mut steps = vec![0, first];
    let m = count.saturating_sub(2).max(1);
    for i in 1..=m {
        let t = (t_final.ln() * i as f64 / m as f64).exp();
        steps.push(((t / dt).round() as usize).min(last));
    }
    steps.sort_unstable();
    steps.dedup();
    steps.into_iter().map(|k| snap(k as f64 * dt)).collect()
}

/// Rounds to the 12 significant digits used in CSV output.
fn snap(t: f64) -> f64 {
    crate::harness::fmt_num(t).parse().expect("formatted float parses")
}

pub fn default_ell_grid(sigma_c: f64) -> Vec<f64> {
    let top = sigma_c - 1.0;
    let mut out: Vec<f64> = (0..).map(|i| 0.25 * i as f64).take_while(|&l| l < top - 1e-12).collect();
    out.push(top);
    out
}

fn check_ell_grid(ell: &[f64], sigma_c: f64) -> Result<()> {
    let top = sigma_c - 1.0;
    if ell.iter().any(|&l| !(-1e-12..=top + 1e-12).contains(&l)) {
        return input(format!("derivative indices must lie in [0, {top}]"));
    }
    if !ell.iter().any(|&l| l.abs() < 1e-12) || !ell.iter().any(|&l| (l - top).abs() < 1e-12) {
        return input(format!("derivative indices must include 0 and {top}"));
    }
    Ok(())
}

/// Whether a mode survives the 2/3 truncation.
fn retained(grid: &Grid, flat: usize) -> bool {
    let idx = grid.unravel(flat);
    (0..grid.dim()).all(|a| {
        let m = grid.shape()[a];
        3 * Grid::signed_index(idx[a], m).unsigned_abs() as usize <= m
    })
}

/// Zeroes every mode outside the 2/3 band.
pub fn dealias(f: &GridField) -> GridField {
    let grid = f.grid().clone();
    let mask: Vec<bool> = (0..grid.points()).map(|p| retained(&grid, p)).collect();
    f.map_spectrum(|p, _, c| if mask[p] { c } else { C64::new(0.0, 0.0) })
}

/// Pointwise product followed by 2/3 truncation.
pub fn dealiased_product(f: &GridField, g: &GridField) -> Result<GridField> {
    f.check_compatible(g)?;
    let values = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    Ok(dealias(&GridField::new(f.grid().clone(), f.components(), values)?))
}

fn negated(grid: &Grid, flat: usize) -> usize {
    let idx = grid.unravel(flat);
    let mut neg = [0usize; 3];
    for a in 0..grid.dim() {
        let m = grid.shape()[a];
        neg[a] = (m - idx[a]) % m;
    }
    grid.ravel(&neg[..grid.dim()])
}

/// Initial perturbation `w0`, scaled so that the density component has sup
/// norm equal to the configured amplitude.
pub fn initial_state(cfg: &SimulationConfig) -> Result<GridField> {
    let grid = cfg.grid()?;
    let size = cfg.n + 1;
    let points = grid.points();
    let density = match cfg.initial.envelope {
        Envelope::Power { cutoff } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.initial.seed);
            let a = cfg.s - 0.5 * cfg.n as f64;
            let mut coeffs = vec![C64::new(0.0, 0.0); points];
            for p in 0..points {
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                let neg = negated(&grid, p);
                let r = grid.mode_radius(p);
                if neg < p || r == 0.0 || !retained(&grid, p) {
                    continue;
                }
                let mag = r.powf(a) * (-(r / cutoff).powi(2)).exp();
                if neg == p {
                    coeffs[p] = C64::new(mag, 0.0);
                } else {
                    coeffs[p] = C64::from_polar(mag, phase);
                    coeffs[neg] = coeffs[p].conj();
                }
            }
            GridField::from_spectrum(grid.clone(), 1, coeffs)?
        }
        Envelope::Bump { radius } => {
            let centre: Vec<f64> = grid.lengths().iter().map(|l| 0.5 * l).collect();
            let bump = GridField::from_fn(grid.clone(), 1, |x, out| {
                let d2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (radius * radius);
                out[0] = if d2 < 1.0 { (1.0 - 1.0 / (1.0 - d2)).exp() } else { 0.0 };
            });
            dealias(&bump)
        }
    };
    let peak = density.max_abs();
    let scale = if peak > 0.0 { cfg.initial.amplitude / peak } else { 0.0 };
    let mut values = vec![0.0; size * points];
    values[..points].iter_mut().zip(density.values()).for_each(|(v, d)| *v = d * scale);
    let ratio = cfg.initial.velocity_ratio;
    if ratio != 0.0 {
        let (a, u) = values.split_at_mut(points);
        u[..points].iter_mut().zip(a.iter()).for_each(|(u, a)| *u = ratio * a);
    }
    GridField::new(grid, size, values)
}

/// Per-run integrity measurements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    /// Largest `|mean(a)(t) - mean(a)(0)|` relative to `max(|mean(a)(0)|, epsilon)`.
    pub mass_drift: f64,
    /// Largest positive rate `(E(t+dt) - E(t)) / dt` of the quadratic energy
    /// `E = 1/2 int (A0 w, w)`.
    pub energy_growth: f64,
    /// Largest `||w||_inf` along the run.
    pub max_amplitude: f64,
}

/// Sampled solution of a simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    pub history: NormHistory,
    pub diagnostics: Diagnostics,
    pub projector: RMat,
}

fn quadratic_energy(a0: &RMat, w: &GridField) -> f64 {
    let points = w.grid().points();
    let size = w.components();
    let v = w.values();
    let mut e = 0.0;
    for i in 0..size {
        for j in 0..size {
            let a = a0[(i, j)];
            if a != 0.0 {
                e += a * v[i * points..(i + 1) * points]
                    .iter()
                    .zip(&v[j * points..(j + 1) * points])
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            }
        }
    }
    0.5 * e * w.grid().cell_volume()
}

/// Evolves the perturbation with exponential Duhamel steps; the residual
/// is evaluated pseudospectrally and truncated to the 2/3 band.
pub fn simulate_damped_euler(cfg: &SimulationConfig) -> Result<Trajectory> {
    cfg.check()?;
    let model = cfg.model()?;
    let sys = model.linear_system();
    let grid = cfg.grid()?;
    let steps = cfg.sample_steps()?;
    let last = (cfg.t_final / cfg.dt).round() as usize;
    let mut w = initial_state(cfg)?;
    if cfg.dealias == Dealias::TwoThirds {
        w = dealias(&w);
    }
    let stepper = ExponentialStepper::new(sys, &grid, cfg.dt, cfg.scheme)?;
    let eps = cfg.initial.amplitude;
    let mean0 = w.mean(0);
    let mass_scale = mean0.abs().max(eps).max(f64::MIN_POSITIVE);
    let mut diag = Diagnostics { max_amplitude: w.max_abs(), ..Default::default() };
    let mut energy = quadratic_energy(sys.a0(), &w);
    let mut snapshots = Vec::with_capacity(steps.len());
    let mut next = 0;
    let trivial = eps == 0.0;
    for k in 0..=last {
        if next < steps.len() && steps[next] == k {
            snapshots.push(w.clone());
            next += 1;
        }
        if k == last || next == steps.len() {
            break;
        }
        let t = k as f64 * cfg.dt;
        if !trivial {
            w = stepper
                .step(&w, t, |tau, state| {
                    let r = euler_normal_form_rhs(&model, state).map_err(|e| match e {
                        Error::Domain(reason) => Error::SimulationAbort { time: tau, reason },
                        other => other,
                    })?;
                    Ok(match cfg.dealias {
                        Dealias::TwoThirds => dealias(&r),
                        Dealias::None => r,
                    })
                })?;
        }
        diag.steps += 1;
        let amp = w.max_abs();
        if !amp.is_finite() || w.values()[..grid.points()].iter().any(|&a| a.abs() >= DampedEuler::ADMISSIBLE * model.sound_speed()) {
            return Err(Error::SimulationAbort {
                time: t + cfg.dt,
                reason: format!("state left the admissible set (sup norm {amp:.3e})"),
            });
        }
        diag.max_amplitude = diag.max_amplitude.max(amp);
        diag.mass_drift = diag.mass_drift.max((w.mean(0) - mean0).abs() / mass_scale);
        let e = quadratic_energy(sys.a0(), &w);
        diag.energy_growth = diag.energy_growth.max((e - energy) / cfg.dt);
        energy = e;
    }
    let times = cfg.sample_times.clone();
    let history = norm_history(&model, &times, &snapshots)?;
    Ok(Trajectory { times, snapshots, history, diagnostics: diag, projector: sys.projector().clone() })
}

/// Norm series of a sampled trajectory: `L2`, `perp-L2`, `Linf`, and the
/// physical `density-L2` (of `rho - rho_bar`) and `momentum-L2`.
pub fn norm_history(model: &DampedEuler, times: &[f64], snapshots: &[GridField]) -> Result<NormHistory> {
    if times.len() != snapshots.len() {
        return input("times and snapshots differ in length");
    }
    let p = model.linear_system().projector();
    let (rho_bar, c) = (model.rest_density(), model.sound_speed());
    let mut hist = NormHistory::new(times.to_vec());
    let mut cols: [Vec<f64>; 5] = Default::default();
    for w in snapshots {
        let points = w.grid().points();
        let cell = w.grid().cell_volume();
        let a = w.component(0);
        let mut mom2 = 0.0;
        for i in 0..points {
            let rho = rho_bar * (1.0 + a[i] / c);
            let u2: f64 = (1..w.components()).map(|k| w.component(k)[i].powi(2)).sum();
            mom2 += rho * rho * u2;
        }
        cols[0].push(w.l2_norm());
        cols[1].push(orthogonal_part(w, p)?.l2_norm());
        cols[2].push(w.max_abs());
        cols[3].push(rho_bar / c * (a.iter().map(|v| v * v).sum::<f64>() * cell).sqrt());
        cols[4].push((mom2 * cell).sqrt());
    }
    for (name, col) in ["L2", "perp-L2", "Linf", "density-L2", "momentum-L2"].iter().zip(cols) {
        hist.insert(name, col);
    }
    Ok(hist)
}

/// `(I - P) f` applied pointwise.
pub fn orthogonal_part(f: &GridField, p: &RMat) -> Result<GridField> {
    let size = f.components();
    if p.nrows() != size || p.ncols() != size {
        return input(format!("projector of size {} does not match a {size}-component field", p.nrows()));
    }
    let points = f.grid().points();
    let q = RMat::identity(size, size) - p;
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for i in 0..size {
        for j in 0..size {
            let c = q[(i, j)];
            if c != 0.0 {
                let (dst, src) = (&mut out[i * points..(i + 1) * points], &v[j * points..(j + 1) * points]);
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += c * s);
            }
        }
    }
    GridField::new(f.grid().clone(), size, out)
}

/// `Lambda^l f` for any real `l`, dropping the mean mode.
fn lambda(f: &GridField, l: f64) -> GridField {
    if l == 0.0 {
        return f.clone();
    }
    f.apply_radial(|r| if r == 0.0 { 0.0 } else { r.powf(l) })
}

fn running_sup(v: Vec<f64>) -> Vec<f64> {
    let mut best = 0.0f64;
    v.into_iter()
        .map(|x| {
            best = best.max(x);
            best
        })
        .collect()
}

/// Running suprema of the rate-weighted Besov norms along a trajectory.
///
/// Columns: `E0`; `E1-interior`, `E1-endpoint`, `E1`; `E2-interior`,
/// `E2-endpoint`, `E2`. Interior terms take the sup over `ell_grid`
/// entries below their endpoint; when that range is empty (`E2` in 1D)
/// the interior column is zero.
pub fn time_weighted_functionals(traj: &Trajectory, s: f64, sigma_c: f64, ell_grid: &[f64]) -> Result<NormHistory> {
    check_ell_grid(ell_grid, sigma_c)?;
    let Some(first) = traj.snapshots.first() else {
        return input("trajectory has no snapshots");
    };
    let part = DyadicPartition::new(first.grid())?;
    let two = Exponent::Two;
    let one = Exponent::One;
    let top = sigma_c - 1.0;
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (&t, w) in traj.times.iter().zip(&traj.snapshots) {
        let perp = orthogonal_part(w, &traj.projector)?;
        let weight = |e: f64| (1.0 + t).powf(e / 2.0);
        cols[0].push(part.besov_norm(w, &BesovSpec::inhomogeneous(sigma_c, two, one))?);
        let mut e1 = 0.0f64;
        let mut e2 = 0.0f64;
        for &l in ell_grid.iter().filter(|&&l| l < top - 1e-12) {
            let v = part.besov_norm(&lambda(w, l), &BesovSpec::inhomogeneous(top - l, two, one))?;
            e1 = e1.max(weight(s + l) * v);
            if l < sigma_c - 2.0 - 1e-12 {
                let v = part.besov_norm(&lambda(&perp, l), &BesovSpec::inhomogeneous(sigma_c - 2.0 - l, two, one))?;
                e2 = e2.max(weight(s + l + 1.0) * v);
            }
        }
        cols[1].push(e1);
        cols[2].push(weight(s + top) * part.besov_norm(&lambda(w, top), &BesovSpec::homogeneous(0.0, two, one))?);
        cols[3].push(e2);
        cols[4].push(
            weight(s + top) * part.besov_norm(&lambda(&perp, sigma_c - 2.0), &BesovSpec::homogeneous(0.0, two, one))?,
        );
    }
    let [e0, e1i, e1e, e2i, e2e] = cols.map(running_sup);
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();
    let (e1, e2) = (sum(&e1i, &e1e), sum(&e2i, &e2e));
    let mut hist = NormHistory::new(traj.times.clone());
    for (name, col) in [
        ("E0", e0),
        ("E1-interior", e1i),
        ("E1-endpoint", e1e),
        ("E1", e1),
        ("E2-interior", e2i),
        ("E2-endpoint", e2e),
        ("E2", e2),
    ] {
        hist.insert(name, col);
    }
    Ok(hist)
}

/// `||R||_2 / (||w||_inf (||grad w||_2 + ||(I-P) w||_2))` for one state.
pub fn residual_ratio(model: &DampedEuler, w: &GridField) -> Result<f64> {
    let r = euler_normal_form_rhs(model, w)?;
    let grad: f64 = (0..w.grid().dim()).map(|j| w.derivative(j).l2_norm().powi(2)).sum::<f64>().sqrt();
    let perp = orthogonal_part(w, model.linear_system().projector())?.l2_norm();
    let denom = w.max_abs() * (grad + perp);
    Ok(if denom > 0.0 { r.l2_norm() / denom } else { 0.0 })
}

impl Trajectory {
    /// Writes `times.csv`, `snapshots/w_NNNNN.gfld` and `norms.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        use crate::harness::fmt_num;
        let snaps = dir.join("snapshots");
        fs::create_dir_all(&snaps)?;
        let mut times = String::from("index,t\n");
        for (i, (t, w)) in self.times.iter().zip(&self.snapshots).enumerate() {
            times.push_str(&format!("{i},{}\n", fmt_num(*t)));
            let file = fs::File::create(snaps.join(format!("w_{i:05}.gfld")))?;
            w.write_binary(std::io::BufWriter::new(file))?;
        }
        fs::write(snaps.join("times.csv"), times)?;
        fs::write(dir.join("norms.csv"), self.history.to_csv())?;
        Ok(())
    }

    /// Reloads snapshots written by [`Trajectory::save`] and recomputes
    /// the norm history.
    pub fn load(dir: &Path, model: &DampedEuler) -> Result<Self> {
        let snaps = dir.join("snapshots");
        let text = fs::read_to_string(snaps.join("times.csv"))?;
        let mut times = Vec::new();
        let mut snapshots = Vec::new();
        for (i, line) in text.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
            let t = line
                .split(',')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("times.csv line {}", i + 2)))?;
            let file = fs::File::open(snaps.join(format!("w_{i:05}.gfld")))?;
            let w = GridField::read_binary(std::io::BufReader::new(file))?;
            if let Some(first) = snapshots.first() {
                w.check_compatible(first)?;
            }
            times.push(t);
            snapshots.push(w);
        }
        let history = norm_history(model, &times, &snapshots)?;
        Ok(Self {
            times,
            snapshots,
            history,
            diagnostics: Diagnostics::default(),
            projector: model.linear_system().projector().clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_solver::solve_linear_grid;

    fn small(eps: f64) -> SimulationConfig {
        let dt = 0.05;
        SimulationConfig {
            resolution: 512,
            box_length: 64.0 * PI,
            initial: InitialData { amplitude: eps, envelope: Envelope::Power { cutoff: 1.0 }, seed: 3, velocity_ratio: 0.0 },
            dt,
            t_final: 10.0,
            sample_times: default_sample_times(dt, 10.0, 12),
            ..SimulationConfig::reference_1d()
        }
    }

    #[test]
    fn zero_amplitude_stays_at_rest() {
        let traj = simulate_damped_euler(&small(0.0)).unwrap();
        assert!(traj.snapshots.iter().all(|w| w.max_abs() == 0.0));
        let f = time_weighted_functionals(&traj, 0.5, 1.5, &[0.0, 0.25, 0.5]).unwrap();
        for name in ["E0", "E1", "E2"] {
            assert!(f.get(name).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn small_amplitude_follows_linear_flow() {
        let cfg = small(1e-6);
        let traj = simulate_damped_euler(&cfg).unwrap();
        let sys = cfg.model().unwrap().linear_system().clone();
        let w0 = &traj.snapshots[0];
        for (t, w) in traj.times.iter().zip(&traj.snapshots) {
            let lin = solve_linear_grid(&sys, w0, *t).unwrap();
            let rel = w.sub(&lin).unwrap().l2_norm() / lin.l2_norm();
            assert!(rel < 1e-4, "t = {t}: relative deviation {rel:e}");
        }
    }

    #[test]
    fn mass_is_conserved() {
        let traj = simulate_damped_euler(&small(5e-2)).unwrap();
        assert!(traj.diagnostics.mass_drift < 1e-10, "{:?}", traj.diagnostics);
    }

    #[test]
    fn energy_grows_at_most_cubically() {
        let eps = 5e-2;
        let traj = simulate_damped_euler(&small(eps)).unwrap();
        let vol = 64.0 * PI;
        assert!(traj.diagnostics.energy_growth <= eps.powi(3) * vol, "{:?}", traj.diagnostics);
    }

    #[test]
    fn functionals_are_monotone() {
        let traj = simulate_damped_euler(&small(1e-2)).unwrap();
        let f = time_weighted_functionals(&traj, 0.5, 1.5, &default_ell_grid(1.5)).unwrap();
        for name in f.names() {
            let v = f.get(name).unwrap();
            assert!(v.windows(2).all(|p| p[1] >= p[0]), "{name}");
        }
        assert!(f.get("E2-interior").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ell_grid_is_checked() {
        let traj = simulate_damped_euler(&small(0.0)).unwrap();
        assert!(matches!(time_weighted_functionals(&traj, 0.5, 1.5, &[0.0, 0.75]), Err(Error::Input(_))));
        assert!(matches!(time_weighted_functionals(&traj, 0.5, 1.5, &[0.25, 0.5]), Err(Error::Input(_))));
    }

    #[test]
    fn cfl_and_amplitude_are_checked() {
        let mut cfg = small(1e-2);
        cfg.dt = 1.0;
        cfg.sample_times = vec![0.0, 1.0];
        assert!(matches!(simulate_damped_euler(&cfg), Err(Error::Input(_))));
        let cfg = small(0.6);
        assert!(matches!(simulate_damped_euler(&cfg), Err(Error::Input(_))));
    }

    #[test]
    fn off_grid_sample_time_is_rejected() {
        let mut cfg = small(1e-2);
        cfg.sample_times = vec![0.0, 0.123];
        assert!(matches!(cfg.check(), Err(Error::Input(_))));
    }

    #[test]
    fn orthogonal_part_of_euler_is_velocity() {
        let grid = Grid::cube(1, 16, 1.0).unwrap();
        let f = GridField::from_fn(grid, 2, |x, out| {
            out[0] = x[0].sin();
            out[1] = x[0].cos();
        });
        let p = DampedEuler::new(1, 0.5, 2.0).unwrap().linear_system().projector().clone();
        let q = orthogonal_part(&f, &p).unwrap();
        assert!(q.component(0).iter().all(|&v| v == 0.0));
        assert_eq!(q.component(1), f.component(1));
        assert_eq!(orthogonal_part(&q, &p).unwrap(), q);
        assert!(matches!(orthogonal_part(&f, &RMat::identity(3, 3)), Err(Error::Input(_))));
    }

    #[test]
    fn dealiased_product_matches_truncated_convolution() {
        let m = 32;
        let grid = Grid::cube(1, m, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let band = |rng: &mut ChaCha8Rng| {
            let mut c = vec![C64::new(0.0, 0.0); m];
            for k in 1..=m / 3 {
                c[k] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                c[m - k] = c[k].conj();
            }
            c[0] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            c
        };
        let (cf, cg) = (band(&mut rng), band(&mut rng));
        let f = GridField::from_spectrum(grid.clone(), 1, cf.clone()).unwrap();
        let g = GridField::from_spectrum(grid.clone(), 1, cg.clone()).unwrap();
        let prod = dealiased_product(&f, &g).unwrap();
        let signed = |i: usize| Grid::signed_index(i, m);
        for k in 0..m {
            let target = signed(k);
            let mut exact = C64::new(0.0, 0.0);
            if 3 * target.unsigned_abs() as usize <= m {
                for i in 0..m {
                    for j in 0..m {
                        if signed(i) + signed(j) == target {
                            exact += cf[i] * cg[j];
                        }
                    }
                }
            }
            assert!((prod.spectrum()[k] - exact).norm() < 1e-12, "mode {k}");
        }
    }

    #[test]
    fn residual_ratio_is_bounded() {
        let traj = simulate_damped_euler(&small(1e-2)).unwrap();
        let model = small(1e-2).model().unwrap();
        for w in &traj.snapshots {
            let r = residual_ratio(&model, w).unwrap();
            assert!(r <= 2.0, "{r}");
        }
    }

    #[test]
    fn save_and_load_roundtrip() {
        let traj = simulate_damped_euler(&small(1e-2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        traj.save(dir.path()).unwrap();
        let model = small(1e-2).model().unwrap();
        let back = Trajectory::load(dir.path(), &model).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.snapshots, traj.snapshots);
        assert_eq!(back.history, traj.history);
    }

    #[test]
    fn unstable_data_aborts_with_time() {
        let dt = 0.01;
        let cfg = SimulationConfig {
            resolution: 256,
            box_length: 20.0,
            initial: InitialData { amplitude: 0.49, envelope: Envelope::Bump { radius: 0.5 }, seed: 0, velocity_ratio: 1.0 },
            dt,
            t_final: 40.0,
            sample_times: vec![0.0, 40.0],
            dealias: Dealias::None,
            ..SimulationConfig::reference_1d()
        };
        match simulate_damped_euler(&cfg) {
            Err(Error::SimulationAbort { time, .. }) => assert!(time > 0.0 && time <= 40.0),
            other => panic!("expected an abort, got {:?}", other.map(|t| t.diagnostics)),
        }
    }
}
