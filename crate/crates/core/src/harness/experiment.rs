//! Config-driven experiments: validate, certify, solve or simulate, fit and
//! compare, writing every artifact to one output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fmt_num;
use super::predicted::{is_registered, ClaimParams};
use super::report::{comparisons_to_csv, compare, summary, TheoryComparison};
use super::svg::LogLogPlot;
use crate::error::{input, Error, Result};
use crate::linear_solver::{solve_linear_radial, NormHistory, RadialInitialData, RadialNorm};
use crate::nonlinear_solver::{default_sample_times, simulate_damped_euler, time_weighted_functionals, SimulationConfig, Trajectory};
use crate::spectral::{
    check_sk_kernel, direction_samples, log_radii, lyapunov_family, random_directions, spectral_gap_fit,
    SynthesisOptions,
};
use crate::system_model::{builtin_system, LinearDissipativeSystem, NonlinearModel, ValidationReport};

/// Default exponent tolerance for quadrature-based runs.
pub const LINEAR_TOLERANCE: f64 = 0.05;
/// Default exponent tolerance for torus simulations.
pub const NONLINEAR_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_radius_lo")]
    pub radius_lo: f64,
    #[serde(default = "default_radius_hi")]
    pub radius_hi: f64,
    #[serde(default = "default_radius_count")]
    pub radius_count: usize,
    /// Random directions added to the fixed sample set when `n >= 2`.
    #[serde(default)]
    pub extra_directions: usize,
    /// Also build a compensating-matrix family.
    #[serde(default)]
    pub synthesize: bool,
}

fn default_radius_lo() -> f64 {
    1e-2
}
fn default_radius_hi() -> f64 {
    1e2
}
fn default_radius_count() -> usize {
    41
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            radius_lo: default_radius_lo(),
            radius_hi: default_radius_hi(),
            radius_count: default_radius_count(),
            extra_directions: 0,
            synthesize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormSpec {
    Lambda { ell: f64 },
    LambdaPerp { ell: f64 },
    Besov { sigma: f64 },
}

impl From<NormSpec> for RadialNorm {
    fn from(n: NormSpec) -> Self {
        match n {
            NormSpec::Lambda { ell } => RadialNorm::Lambda(ell),
            NormSpec::LambdaPerp { ell } => RadialNorm::LambdaPerp(ell),
            NormSpec::Besov { sigma } => RadialNorm::Besov(sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Whole-space evolution of radial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub s: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Direction of the data in state space; all ones when omitted.
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
    pub times: TimeGrid,
    pub norms: Vec<NormSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSpec {
    /// Norm series the claim is checked against.
    pub quantity: String,
    pub claim: String,
    #[serde(default)]
    pub params: ClaimParams,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Linear system id or path; for simulations, its linearization is
    /// validated instead when omitted.
    #[serde(default)]
    pub system: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub certify: Option<CertifyConfig>,
    #[serde(default)]
    pub linear: Option<LinearConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    /// Largest allowed `(E1 + E2)(T) / (E1 + E2)(1)` for simulations.
    #[serde(default)]
    pub functional_bound: Option<f64>,
    #[serde(default)]
    pub claims: Vec<ClaimSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(sim) = cfg.simulation.as_mut() {
            if sim.sample_times.is_empty() {
                sim.sample_times = default_sample_times(sim.dt, sim.t_final, 60);
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Static checks run before any computation.
    pub fn check(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return input("experiment name must be a nonempty plain file name");
        }
        match (&self.linear, &self.simulation) {
            (Some(_), Some(_)) => return input("an experiment runs either [linear] or [simulation], not both"),
            (None, None) if !self.claims.is_empty() => {
                return input("claims need a [linear] or [simulation] section")
            }
            (Some(_), None) if self.system.is_none() => return input("[linear] needs a `system`"),
            _ => {}
        }
        for c in &self.claims {
            if !is_registered(&c.claim) {
                return input(format!("unknown claim id `{}`", c.claim));
            }
            if let Some(t) = c.tolerance {
                if !(t > 0.0) {
                    return input(format!("tolerance for `{}` must be positive", c.quantity));
                }
            }
            if let Some((a, b)) = c.window {
                if !(a < b) {
                    return input(format!("empty fit window for `{}`", c.quantity));
                }
            }
        }
        if let Some(lin) = &self.linear {
            if lin.norms.is_empty() || lin.times.count < 8 || !(lin.times.lo > 0.0 && lin.times.lo < lin.times.hi) {
                return input("[linear] needs norms and at least 8 increasing positive times");
            }
            let names: Vec<String> = lin.norms.iter().map(|n| RadialNorm::from(*n).name()).collect();
            for c in &self.claims {
                if !names.contains(&c.quantity) {
                    return input(format!("claim quantity `{}` is not among the measured norms {names:?}", c.quantity));
                }
            }
        }
        if let Some(sim) = &self.simulation {
            sim.check()?;
            for c in &self.claims {
                if !SIMULATION_SERIES.contains(&c.quantity.as_str()) {
                    return input(format!("claim quantity `{}` is not a simulation series", c.quantity));
                }
            }
        }
        Ok(())
    }

    fn default_tolerance(&self) -> f64 {
        if self.simulation.is_some() { NONLINEAR_TOLERANCE } else { LINEAR_TOLERANCE }
    }
}

const SIMULATION_SERIES: &[&str] = &["L2", "perp-L2", "Linf", "density-L2", "momentum-L2"];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    pub keep_partial: bool,
    /// Reuse stored simulation snapshots instead of simulating.
    pub resume: bool,
}

/// A named pass/fail check outside the exponent comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub out_dir: PathBuf,
    pub comparisons: Vec<TheoryComparison>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.passed) && self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = summary(&format!("experiment {}", self.name), &self.comparisons);
        for c in &self.checks {
            s.push_str(&format!("{:<4} {:<24} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        s
    }
}

/// Records written files so a failed run can clean up after itself.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    created_dirs: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        let mut created_dirs = Vec::new();
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir)?;
        created_dirs.extend(missing);
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), created_dirs })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn discard(&self) {
        for f in &self.written {
            let _ = fs::remove_file(f);
        }
        let _ = fs::remove_dir(self.dir.join("plots"));
        for d in &self.created_dirs {
            let _ = fs::remove_dir(d);
        }
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage { stage: name.into(), source: Box::new(other) },
    })
}

fn validation_csv(rep: &ValidationReport) -> String {
    let mut s = String::from("predicate,passed,measured,tolerance,note\n");
    for p in &rep.predicates {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.name,
            p.passed,
            fmt_num(p.measured),
            fmt_num(p.tolerance),
            p.note.as_deref().unwrap_or("")
        ));
    }
    s
}

/// Direction samples for structural and spectral checks.
pub fn certification_directions(n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut omegas = direction_samples(n);
    if n >= 2 && extra > 0 {
        omegas.extend(random_directions(n, extra, seed));
    }
    omegas
}

fn validate_and_certify(
    sys: &LinearDissipativeSystem,
    cfg: &ExperimentConfig,
    seed: u64,
    out: &mut Outputs,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let cert = cfg.certify.clone().unwrap_or_default();
    let omegas = certification_directions(sys.dim(), cert.extra_directions, seed);
    let rep = stage("validate", sys.validate(&omegas))?;
    stage("validate", out.write("validation.csv", &validation_csv(&rep)))?;
    if !rep.passed() {
        let failed: Vec<&str> = rep.predicates.iter().filter(|p| !p.passed).map(|p| p.name.as_str()).collect();
        return stage("validate", Err(Error::Domain(format!("structural checks failed: {}", failed.join(", ")))));
    }
    stage("write", out.write("system.toml", &sys.to_text()))?;
    if cfg.certify.is_none() {
        return Ok(());
    }
    let kernel = stage("certify", check_sk_kernel(sys, &omegas))?;
    let radii = log_radii(cert.radius_lo, cert.radius_hi, cert.radius_count);
    let gap = stage("certify", spectral_gap_fit(sys, &radii, &omegas))?;
    let mut csv = String::from("radius,direction,max_real_part,ratio\n");
    for (i, r) in gap.radii.iter().enumerate() {
        for k in 0..gap.omegas.len() {
            csv.push_str(&format!("{},{k},{},{}\n", fmt_num(*r), fmt_num(gap.worst[i][k]), fmt_num(gap.ratio(i, k))));
        }
    }
    stage("write", out.write("spectral_gap.csv", &csv))?;
    let mut summary = serde_json::json!({
        "kernel": kernel,
        "c_star": gap.c_star,
        "gap_passed": gap.passed,
        "argmin_radius": gap.radii[gap.argmin.0],
        "argmin_direction": gap.omegas[gap.argmin.1],
    });
    if cert.synthesize {
        let opts = SynthesisOptions { seed, ..Default::default() };
        let fam = stage("certify", lyapunov_family(sys, &omegas, &opts))?;
        summary["lyapunov"] = serde_json::to_value(&fam).map_err(|e| Error::Numerical(e.to_string()))?;
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Numerical(e.to_string()))?;
    stage("write", out.write("certification.json", &(text + "\n")))?;
    checks.push(Check {
        name: "sk-kernel".into(),
        passed: kernel.passed,
        detail: format!("min separation {:.3e}", kernel.min_separation),
    });
    checks.push(Check { name: "spectral-gap".into(), passed: gap.passed, detail: format!("c* = {:.6}", gap.c_star) });
    if !(kernel.passed && gap.passed) {
        return stage("certify", Err(Error::Domain("the system fails the stability certificate".into())));
    }
    Ok(())
}

fn comparisons(cfg: &ExperimentConfig, history: &NormHistory) -> Result<Vec<TheoryComparison>> {
    cfg.claims
        .iter()
        .map(|c| {
            let tol = c.tolerance.unwrap_or_else(|| cfg.default_tolerance());
            compare(history, &c.quantity, &c.claim, &c.params, c.window, tol)
        })
        .collect()
}

fn plots(cfg: &ExperimentConfig, history: &NormHistory, rows: &[TheoryComparison], out: &mut Outputs) -> Result<()> {
    for (spec, row) in cfg.claims.iter().zip(rows) {
        let values = history.get(&spec.quantity).unwrap_or_default();
        let ts: Vec<f64> = history.times.iter().map(|t| 1.0 + t).collect();
        let anchor_t = 1.0 + row.fit.t1;
        let anchor = (anchor_t, row.fit.prefactor * anchor_t.powf(row.fit.exponent));
        let plot = LogLogPlot::new(&format!("{}: {}", cfg.name, spec.quantity), "1 + t", &spec.quantity)
            .series(&spec.quantity, &ts, values)
            .guide(&format!("predicted slope {:.3}", row.predicted), row.predicted, anchor);
        let file = format!("plots/{}_{}.svg", sanitize(&spec.quantity), sanitize(&spec.claim));
        out.write(&file, &plot.to_svg())?;
    }
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn finish(
    cfg: &ExperimentConfig,
    history: &NormHistory,
    out: &mut Outputs,
    mut checks: Vec<Check>,
    extra: Option<&NormHistory>,
) -> Result<ExperimentReport> {
    let rows = stage("fit", comparisons(cfg, history))?;
    if let (Some(f), Some(bound)) = (extra, cfg.functional_bound) {
        checks.push(functional_check(f, bound)?);
    }
    stage("write", out.write("comparisons.csv", &comparisons_to_csv(&rows)))?;
    stage("write", plots(cfg, history, &rows, out))?;
    let report = ExperimentReport { name: cfg.name.clone(), out_dir: out.dir.clone(), comparisons: rows, checks };
    stage("write", out.write("summary.txt", &report.summary()))?;
    Ok(report)
}

fn functional_check(f: &NormHistory, bound: f64) -> Result<Check> {
    let (Some(e1), Some(e2)) = (f.get("E1"), f.get("E2")) else {
        return input("functional history lacks E1/E2");
    };
    let Some(i1) = f.times.iter().position(|&t| (t - 1.0).abs() < 1e-9) else {
        return input("functional history has no sample at t = 1");
    };
    let last = f.times.len() - 1;
    let ratio = (e1[last] + e2[last]) / (e1[i1] + e2[i1]);
    Ok(Check {
        name: "functionals-bounded".into(),
        passed: ratio <= bound,
        detail: format!("(E1 + E2)(T) / (E1 + E2)(1) = {ratio:.4} (bound {bound})"),
    })
}

/// Writes a history and returns it as parsed back from the CSV, so that
/// verdicts computed now and from stored files agree exactly.
fn store(out: &mut Outputs, name: &str, history: &NormHistory) -> Result<NormHistory> {
    let text = history.to_csv();
    stage("write", out.write(name, &text))?;
    stage("write", NormHistory::from_csv(&text))
}

fn run_linear(lin: &LinearConfig, sys: &LinearDissipativeSystem, out: &mut Outputs) -> Result<NormHistory> {
    let vector = lin.vector.clone().unwrap_or_else(|| vec![1.0; sys.size()]);
    let data = stage("solve", RadialInitialData::new(sys.dim(), lin.s, lin.amplitude, vector))?;
    let times = log_radii(lin.times.lo, lin.times.hi, lin.times.count);
    let norms: Vec<RadialNorm> = lin.norms.iter().map(|n| RadialNorm::from(*n)).collect();
    let history = stage("solve", solve_linear_radial(sys, &data, &times, &norms))?;
    store(out, "norms.csv", &history)
}

fn run_simulation(
    sim: &SimulationConfig,
    opts: &RunOptions,
    out: &mut Outputs,
) -> Result<(NormHistory, NormHistory)> {
    let mut sim = sim.clone();
    if let Some(seed) = opts.seed {
        sim.initial.seed = seed;
    }
    let model = stage("simulate", sim.model())?;
    let traj = if opts.resume {
        stage("simulate", Trajectory::load(&out.dir, &model))?
    } else {
        let t = stage("simulate", simulate_damped_euler(&sim))?;
        stage("write", t.save(&out.dir))?;
        let diag = serde_json::to_string_pretty(&t.diagnostics).map_err(|e| Error::Numerical(e.to_string()))?;
        stage("write", out.write("diagnostics.json", &(diag + "\n")))?;
        t
    };
    if traj.times != sim.sample_times {
        return stage("simulate", input("stored snapshots do not match the configured sample times"));
    }
    let functionals = stage("fit", time_weighted_functionals(&traj, sim.s, sim.sigma_c(), &sim.ell_grid()))?;
    Ok((store(out, "norms.csv", &traj.history)?, store(out, "functionals.csv", &functionals)?))
}

/// Runs the full pipeline of an experiment into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> Result<ExperimentReport> {
    stage("config", cfg.check())?;
    let mut out = stage("write", Outputs::new(out_dir))?;
    let result = run_stages(cfg, opts, &mut out);
    if result.is_err() && !opts.keep_partial && !opts.resume {
        out.discard();
    }
    result
}

fn run_stages(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Outputs) -> Result<ExperimentReport> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let sys = match (&cfg.system, &cfg.simulation) {
        (Some(id), _) => stage("config", builtin_system(id))?,
        (None, Some(sim)) => stage("config", sim.model())?.linear_system().clone(),
        (None, None) => return stage("config", input("nothing to run: give a system or a simulation")),
    };
    let mut checks = Vec::new();
    validate_and_certify(&sys, cfg, seed, out, &mut checks)?;
    stage("write", out.write("config.toml", &toml::to_string(cfg).map_err(|e| Error::Parse(e.to_string()))?))?;
    if let Some(lin) = &cfg.linear {
        let history = run_linear(lin, &sys, out)?;
        finish(cfg, &history, out, checks, None)
    } else if let Some(sim) = &cfg.simulation {
        let (history, functionals) = run_simulation(sim, opts, out)?;
        finish(cfg, &history, out, checks, Some(&functionals))
    } else {
        let report = ExperimentReport { name: cfg.name.clone(), out_dir: out.dir.clone(), comparisons: vec![], checks };
        stage("write", out.write("summary.txt", &report.summary()))?;
        Ok(report)
    }
}

/// Recomputes verdicts from the CSVs stored by a previous run.
pub fn report_from_stored(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    stage("config", cfg.check())?;
    let read = |name: &str| -> Result<NormHistory> {
        let text = fs::read_to_string(out_dir.join(name))
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", out_dir.join(name).display())))?;
        NormHistory::from_csv(&text)
    };
    let history = stage("report", read("norms.csv"))?;
    let functionals = if cfg.simulation.is_some() { Some(stage("report", read("functionals.csv"))?) } else { None };
    let mut out = Outputs { dir: out_dir.to_path_buf(), written: Vec::new(), created_dirs: Vec::new() };
    finish(cfg, &history, &mut out, Vec::new(), functionals.as_ref())
}
