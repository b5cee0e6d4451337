//! Constant-coefficient dissipative systems, their structural predicates,
//! and the built-in damped compressible Euler model.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::grid::GridField;
use crate::linalg::{asymmetry, lambda_min, max_abs, spectral_norm, sym_eigen_sorted, RMat};

/// Relative tolerance on matrix entries for symmetry-type checks.
pub const ENTRY_TOL: f64 = 1e-10;
/// Eigenvalue threshold relative to the matrix norm.
pub const EIG_TOL: f64 = 1e-8;

/// Linearized system `A0 w_t + sum_j A^j w_{x_j} + L w = 0`, optionally
/// with a second-order term `- sum_{jk} B^{jk} w_{x_j x_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDissipativeSystem {
    n: usize,
    size: usize,
    kernel_dim: usize,
    a0: RMat,
    a: Vec<RMat>,
    l: RMat,
    b: Option<Vec<Vec<RMat>>>,
    p: RMat,
}

impl LinearDissipativeSystem {
    /// Assembles a system and derives `P`. In the hyperbolic-parabolic case
    /// `P` projects onto the common kernel of `L` and `sum_j B^{jj}`.
    pub fn new(a0: RMat, a: Vec<RMat>, l: RMat, b: Option<Vec<Vec<RMat>>>) -> Result<Self> {
        let size = a0.nrows();
        let n = a.len();
        if size == 0 || a0.ncols() != size {
            return input("A0 must be a nonempty square matrix");
        }
        if n == 0 || n > 3 {
            return input(format!("space dimension must be 1, 2 or 3, got {n}"));
        }
        if a.iter().any(|m| m.shape() != (size, size)) || l.shape() != (size, size) {
            return input(format!("flux and damping matrices must all be {size}x{size}"));
        }
        if let Some(b) = &b {
            if b.len() != n
                || b.iter().any(|row| row.len() != n || row.iter().any(|m| m.shape() != (size, size)))
            {
                return input(format!("B must be an {n}x{n} array of {size}x{size} matrices"));
            }
        }
        let mut dissipative = l.clone();
        if let Some(b) = &b {
            for (j, row) in b.iter().enumerate() {
                dissipative += &row[j];
            }
        }
        let p = kernel_projector(&dissipative, EIG_TOL * spectral_norm(&dissipative).max(1.0))?;
        let kernel_dim = p.trace().round() as usize;
        Ok(Self { n, size, kernel_dim, a0, a, l, b, p })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// State dimension `N`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `N1 = dim ker L`.
    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn a0(&self) -> &RMat {
        &self.a0
    }

    pub fn flux(&self, j: usize) -> &RMat {
        &self.a[j]
    }

    pub fn fluxes(&self) -> &[RMat] {
        &self.a
    }

    pub fn damping(&self) -> &RMat {
        &self.l
    }

    pub fn viscosity(&self) -> Option<&Vec<Vec<RMat>>> {
        self.b.as_ref()
    }

    pub fn projector(&self) -> &RMat {
        &self.p
    }

    pub fn is_hyperbolic_parabolic(&self) -> bool {
        self.b.is_some()
    }

    /// `A(omega) = sum_j omega_j A^j`.
    pub fn flux_symbol(&self, omega: &[f64]) -> RMat {
        let mut m = RMat::zeros(self.size, self.size);
        for (aj, w) in self.a.iter().zip(omega) {
            m += aj * *w;
        }
        m
    }

    /// `B(omega) = sum_{jk} B^{jk} omega_j omega_k`, zero when absent.
    pub fn viscosity_symbol(&self, omega: &[f64]) -> RMat {
        let mut m = RMat::zeros(self.size, self.size);
        if let Some(b) = &self.b {
            for j in 0..self.n {
                for k in 0..self.n {
                    m += &b[j][k] * (omega[j] * omega[k]);
                }
            }
        }
        m
    }

    /// Same system with the damping matrix replaced.
    pub fn with_damping(&self, l: RMat) -> Result<Self> {
        Self::new(self.a0.clone(), self.a.clone(), l, self.b.clone())
    }

    /// Checks every structural predicate on the given directions.
    pub fn validate(&self, omegas: &[Vec<f64>]) -> Result<ValidationReport> {
        validate_symmetric_dissipative(self, omegas)
    }

    /// Text bundle: `n`, `N`, `A0`, `A1..An`, `L`, optional `Bjk`, each as
    /// a flat row-major array.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "N = {}", self.size);
        write_matrix(&mut out, "A0", &self.a0);
        for (j, aj) in self.a.iter().enumerate() {
            write_matrix(&mut out, &format!("A{}", j + 1), aj);
        }
        write_matrix(&mut out, "L", &self.l);
        if let Some(b) = &self.b {
            for (j, row) in b.iter().enumerate() {
                for (k, m) in row.iter().enumerate() {
                    write_matrix(&mut out, &format!("B{}{}", j + 1, k + 1), m);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let n = read_usize(&table, "n")?;
        let size = read_usize(&table, "N")?;
        if n == 0 || n > 3 {
            return input(format!("space dimension must be 1, 2 or 3, got {n}"));
        }
        let a0 = read_matrix(&table, "A0", size)?;
        let a = (1..=n)
            .map(|j| read_matrix(&table, &format!("A{j}"), size))
            .collect::<Result<Vec<_>>>()?;
        let l = read_matrix(&table, "L", size)?;
        let has_b = (1..=n).any(|j| (1..=n).any(|k| table.contains_key(&format!("B{j}{k}"))));
        let b = if has_b {
            let mut rows = Vec::with_capacity(n);
            for j in 1..=n {
                let mut row = Vec::with_capacity(n);
                for k in 1..=n {
                    let key = format!("B{j}{k}");
                    row.push(if table.contains_key(&key) {
                        read_matrix(&table, &key, size)?
                    } else {
                        RMat::zeros(size, size)
                    });
                }
                rows.push(row);
            }
            Some(rows)
        } else {
            None
        };
        Self::new(a0, a, l, b)
    }
}

fn write_matrix(out: &mut String, key: &str, m: &RMat) {
    let entries: Vec<String> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| format!("{:?}", m[(i, j)]))
        .collect();
    let _ = writeln!(out, "{key} = [{}]", entries.join(", "));
}

fn read_usize(table: &toml::Table, key: &str) -> Result<usize> {
    match table.get(key) {
        Some(toml::Value::Integer(v)) if *v > 0 => Ok(*v as usize),
        Some(_) => Err(Error::Parse(format!("`{key}` must be a positive integer"))),
        None => Err(Error::Parse(format!("missing key `{key}`"))),
    }
}

fn read_matrix(table: &toml::Table, key: &str, size: usize) -> Result<RMat> {
    let arr = table
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Parse(format!("missing array `{key}`")))?;
    let values = arr
        .iter()
        .map(|v| match v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            _ => Err(Error::Parse(format!("`{key}` holds a non-numeric entry"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != size * size {
        return input(format!("`{key}` has {} entries, expected {}", values.len(), size * size));
    }
    Ok(RMat::from_row_slice(size, size, &values))
}

/// Orthogonal projector onto the eigenspace of `l` with eigenvalues below
/// `tol`. Eigenvalues within a factor 10 of `tol` make the rank ambiguous.
pub fn kernel_projector(l: &RMat, tol: f64) -> Result<RMat> {
    if l.nrows() != l.ncols() {
        return input("kernel_projector needs a square matrix");
    }
    let scale = max_abs(l).max(1.0);
    if asymmetry(l) > ENTRY_TOL * scale {
        return input("kernel_projector needs a symmetric matrix");
    }
    let (values, vectors) = sym_eigen_sorted(l);
    let n = l.nrows();
    let mut p = RMat::zeros(n, n);
    for k in 0..n {
        let lam = values[k].abs();
        if lam >= tol / 10.0 && lam <= tol * 10.0 {
            return Err(Error::AmbiguousRank { eigenvalue: values[k], tolerance: tol });
        }
        if lam < tol {
            let v = vectors.column(k);
            p += v * v.transpose();
        }
    }
    Ok(p)
}

/// Symmetrized linearization of the damped isentropic Euler equations
/// `p = rho^gamma` at rest density `rho_bar`, in variables `(a, u)` with
/// `a = c (rho - rho_bar) / rho_bar`.
pub fn linearize_damped_euler(n: usize, rho_bar: f64, gamma: f64) -> Result<LinearDissipativeSystem> {
    if !(rho_bar > 0.0 && rho_bar.is_finite()) {
        return input("rest density must be positive");
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return input("adiabatic exponent must be at least 1");
    }
    let c = (gamma * rho_bar.powf(gamma - 1.0)).sqrt();
    euler_system_with_speed(n, c)
}

/// The linear Euler system for a given sound speed.
pub fn euler_system_with_speed(n: usize, c: f64) -> Result<LinearDissipativeSystem> {
    if n == 0 || n > 3 {
        return input(format!("space dimension must be 1, 2 or 3, got {n}"));
    }
    let size = n + 1;
    let a = (0..n)
        .map(|j| {
            let mut m = RMat::zeros(size, size);
            m[(0, j + 1)] = c;
            m[(j + 1, 0)] = c;
            m
        })
        .collect();
    let mut l = RMat::identity(size, size);
    l[(0, 0)] = 0.0;
    LinearDissipativeSystem::new(RMat::identity(size, size), a, l, None)
}

/// One structural predicate outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub predicates: Vec<Predicate>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.predicates.iter().all(|p| p.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, measured: f64, tolerance: f64) {
        self.predicates.push(Predicate {
            name: name.to_string(),
            passed,
            measured,
            tolerance,
            note: None,
        });
    }
}

/// Runs every structural predicate of a linear dissipative system.
pub fn validate_symmetric_dissipative(
    sys: &LinearDissipativeSystem,
    omegas: &[Vec<f64>],
) -> Result<ValidationReport> {
    if omegas.is_empty() {
        return input("at least one direction sample is required");
    }
    for w in omegas {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if w.len() != sys.n || (norm - 1.0).abs() > 1e-10 {
            return input("direction samples must be unit vectors of the space dimension");
        }
    }
    let mut rep = ValidationReport { predicates: Vec::new() };
    let rel = |m: &RMat| ENTRY_TOL * max_abs(m).max(1.0);

    let a0_asym = asymmetry(&sys.a0);
    rep.push("A0 symmetric", a0_asym <= rel(&sys.a0), a0_asym, rel(&sys.a0));
    let a0_min = lambda_min(&sys.a0);
    let a0_tol = EIG_TOL * spectral_norm(&sys.a0);
    rep.push("A0 positive definite", a0_min > a0_tol, a0_min, a0_tol);

    let (flux_asym, flux_tol) = sys
        .a
        .iter()
        .map(|m| (asymmetry(m), rel(m)))
        .fold((0.0_f64, f64::INFINITY), |(a, t), (b, u)| (a.max(b), t.min(u)));
    rep.push("Aj symmetric", flux_asym <= flux_tol, flux_asym, flux_tol);

    let l_asym = asymmetry(&sys.l);
    rep.push("L symmetric", l_asym <= rel(&sys.l), l_asym, rel(&sys.l));
    let l_norm = spectral_norm(&sys.l);
    let l_tol = EIG_TOL * l_norm.max(1.0);
    let (l_eigs, _) = sym_eigen_sorted(&sys.l);
    rep.push("L nonnegative", l_eigs[0] >= -l_tol, l_eigs[0], l_tol);
    let rank = l_eigs.iter().filter(|v| v.abs() > l_tol).count();
    let expected = sys.size - sys.kernel_dim;
    // With a viscous term the kernel of L alone may be larger than M.
    let rank_ok = if sys.b.is_some() { rank <= expected } else { rank == expected };
    rep.push("L rank", rank_ok, rank as f64, 0.0);

    let p = &sys.p;
    let p_asym = asymmetry(p);
    rep.push("P symmetric", p_asym <= ENTRY_TOL, p_asym, ENTRY_TOL);
    let idem = max_abs(&(p * p - p));
    rep.push("P idempotent", idem <= 1e-10, idem, 1e-10);
    let lp = max_abs(&(&sys.l * p));
    let lp_tol = 1e-10 * l_norm.max(1.0);
    rep.push("LP zero", lp <= lp_tol, lp, lp_tol);
    let trace_err = (p.trace() - sys.kernel_dim as f64).abs();
    rep.push("P trace", trace_err <= 1e-10, trace_err, 1e-10);

    if sys.b.is_some() {
        let mut worst_asym = 0.0_f64;
        let mut worst_min = f64::INFINITY;
        let mut worst_null = 0.0_f64;
        let mut scale = 1.0_f64;
        for w in omegas {
            let bw = sys.viscosity_symbol(w);
            scale = scale.max(spectral_norm(&bw));
            worst_asym = worst_asym.max(asymmetry(&bw));
            worst_min = worst_min.min(lambda_min(&bw));
            let q = kernel_projector(&bw, EIG_TOL * spectral_norm(&bw).max(1.0))?;
            worst_null = worst_null.max(max_abs(&(q - p)));
        }
        rep.push("B symmetric", worst_asym <= ENTRY_TOL * scale, worst_asym, ENTRY_TOL * scale);
        rep.push("B nonnegative", worst_min >= -EIG_TOL * scale, worst_min, EIG_TOL * scale);
        rep.push("B null space", worst_null <= 1e-8, worst_null, 1e-8);
    }

    rep.predicates.push(Predicate {
        name: "dissipation present".into(),
        passed: true,
        measured: l_norm,
        tolerance: 0.0,
        note: (l_norm == 0.0 && sys.b.is_none()).then(|| "no dissipation".to_string()),
    });
    Ok(rep)
}

/// Nonlinear balance law in normal-form variables `V`, perturbing an
/// equilibrium `V_bar`.
///
/// The normal-form equations read
/// `A0~(V) V_t + sum_j A~^j(V) V_{x_j} = H~(V)` with `H~(V) = -L V + r~(V)`.
pub trait NonlinearModel: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn size(&self) -> usize;
    fn linear_system(&self) -> &LinearDissipativeSystem;

    /// Equilibrium in conserved variables.
    fn equilibrium(&self) -> DVector<f64>;
    /// Equilibrium in normal-form variables.
    fn normal_equilibrium(&self) -> DVector<f64>;
    fn flux(&self, u: &DVector<f64>, j: usize) -> DVector<f64>;
    fn source(&self, u: &DVector<f64>) -> DVector<f64>;
    fn to_normal(&self, u: &DVector<f64>) -> DVector<f64>;
    fn to_conserved(&self, v: &DVector<f64>) -> DVector<f64>;
    fn a0_tilde(&self, v: &DVector<f64>) -> RMat;
    fn a_tilde(&self, v: &DVector<f64>, j: usize) -> RMat;
    fn r_tilde(&self, v: &DVector<f64>) -> DVector<f64>;

    /// Whether a perturbation `w = V - V_bar` stays in the admissible set.
    fn admissible(&self, w: &[f64]) -> bool;

    /// Residual `R` at one point given the perturbation `w` and its
    /// gradient `dw[j][i] = d_j w_i`, defined by
    /// `A0 w_t + sum_j A^j w_{x_j} + L w = R`.
    fn residual_at(&self, w: &[f64], dw: &[&[f64]], out: &mut [f64]) {
        let sys = self.linear_system();
        let size = self.size();
        let v = DVector::from_iterator(size, w.iter().zip(self.normal_equilibrium().iter()).map(|(a, b)| a + b));
        let wv = DVector::from_column_slice(w);
        let a0t = self.a0_tilde(&v);
        let l = sys.damping();
        let mut rhs = self.r_tilde(&v) - l * &wv;
        let mut linear = l * &wv;
        for (j, g) in dw.iter().enumerate() {
            let gv = DVector::from_column_slice(g);
            rhs -= self.a_tilde(&v, j) * &gv;
            linear += sys.flux(j) * &gv;
        }
        let vt = a0t.lu().solve(&rhs).unwrap_or_else(|| DVector::from_element(size, f64::NAN));
        let r = sys.a0() * vt + linear;
        out.copy_from_slice(r.as_slice());
    }
}

/// Damped isentropic Euler equations with `p(rho) = rho^gamma`:
/// `rho_t + div(m) = 0`, `m_t + div(m m / rho) + grad p = -m`.
#[derive(Debug, Clone)]
pub struct DampedEuler {
    n: usize,
    rho_bar: f64,
    gamma: f64,
    c: f64,
    linear: LinearDissipativeSystem,
}

impl DampedEuler {
    /// Largest admissible `|a| / c`.
    pub const ADMISSIBLE: f64 = 0.5;

    pub fn new(n: usize, rho_bar: f64, gamma: f64) -> Result<Self> {
        let linear = linearize_damped_euler(n, rho_bar, gamma)?;
        let c = (gamma * rho_bar.powf(gamma - 1.0)).sqrt();
        Ok(Self { n, rho_bar, gamma, c, linear })
    }

    pub fn sound_speed(&self) -> f64 {
        self.c
    }

    pub fn rest_density(&self) -> f64 {
        self.rho_bar
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn density(&self, a: f64) -> f64 {
        self.rho_bar * (1.0 + a / self.c)
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    pub fn pressure_slope(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `h(a) = p'(rho) rho_bar / (rho c)`, equal to `c` at rest.
    fn enthalpy_slope(&self, a: f64) -> f64 {
        let rho = self.density(a);
        self.pressure_slope(rho) * self.rho_bar / (rho * self.c)
    }
}

impl NonlinearModel for DampedEuler {
    fn id(&self) -> &str {
        "damped-euler"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn size(&self) -> usize {
        self.n + 1
    }

    fn linear_system(&self) -> &LinearDissipativeSystem {
        &self.linear
    }

    fn equilibrium(&self) -> DVector<f64> {
        let mut u = DVector::zeros(self.n + 1);
        u[0] = self.rho_bar;
        u
    }

    fn normal_equilibrium(&self) -> DVector<f64> {
        DVector::zeros(self.n + 1)
    }

    fn flux(&self, u: &DVector<f64>, j: usize) -> DVector<f64> {
        let rho = u[0];
        let mut f = DVector::zeros(self.n + 1);
        f[0] = u[j + 1];
        for i in 0..self.n {
            f[i + 1] = u[j + 1] * u[i + 1] / rho;
        }
        f[j + 1] += self.pressure(rho);
        f
    }

    fn source(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut g = -u.clone();
        g[0] = 0.0;
        g
    }

    fn to_normal(&self, u: &DVector<f64>) -> DVector<f64> {
        let rho = u[0];
        let mut v = DVector::zeros(self.n + 1);
        v[0] = self.c * (rho - self.rho_bar) / self.rho_bar;
        for i in 0..self.n {
            v[i + 1] = u[i + 1] / rho;
        }
        v
    }

    fn to_conserved(&self, v: &DVector<f64>) -> DVector<f64> {
        let rho = self.density(v[0]);
        let mut u = DVector::zeros(self.n + 1);
        u[0] = rho;
        for i in 0..self.n {
            u[i + 1] = rho * v[i + 1];
        }
        u
    }

    fn a0_tilde(&self, v: &DVector<f64>) -> RMat {
        let rho = self.density(v[0]);
        let mut m = RMat::identity(self.n + 1, self.n + 1) * (rho / self.rho_bar);
        m[(0, 0)] = self.rho_bar * self.pressure_slope(rho) / (self.c * self.c * rho);
        m
    }

    fn a_tilde(&self, v: &DVector<f64>, j: usize) -> RMat {
        let rho = self.density(v[0]);
        let dp = self.pressure_slope(rho);
        let uj = v[j + 1];
        let mut m = RMat::identity(self.n + 1, self.n + 1) * (rho / self.rho_bar * uj);
        m[(0, 0)] = self.rho_bar * dp * uj / (self.c * self.c * rho);
        m[(0, j + 1)] = dp / self.c;
        m[(j + 1, 0)] = dp / self.c;
        m
    }

    fn r_tilde(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v * (-v[0] / self.c);
        r[0] = 0.0;
        r
    }

    fn admissible(&self, w: &[f64]) -> bool {
        w.iter().all(|v| v.is_finite()) && w[0].abs() < Self::ADMISSIBLE * self.c
    }

    fn residual_at(&self, w: &[f64], dw: &[&[f64]], out: &mut [f64]) {
        let a = w[0];
        let u = &w[1..];
        let mut div_u = 0.0;
        let mut u_grad_a = 0.0;
        for j in 0..self.n {
            div_u += dw[j][j + 1];
            u_grad_a += u[j] * dw[j][0];
        }
        out[0] = -u_grad_a - a * div_u;
        let excess = self.enthalpy_slope(a) - self.c;
        for i in 0..self.n {
            let mut adv = 0.0;
            for j in 0..self.n {
                adv += u[j] * dw[j][i + 1];
            }
            out[i + 1] = -adv - excess * dw[i][0];
        }
    }
}

/// Residual field `R(w)` of a nonlinear model for a perturbation field `w`.
pub fn euler_normal_form_rhs(model: &dyn NonlinearModel, state: &GridField) -> Result<GridField> {
    let n = model.dim();
    let size = model.size();
    if state.components() != size || state.grid().dim() != n {
        return input("state does not match the model's dimensions");
    }
    let grads: Vec<GridField> = (0..n).map(|j| state.derivative(j)).collect();
    residual_from_gradients(model, state, &grads)
}

/// Residual from precomputed spatial derivatives of the state.
pub fn residual_from_gradients(
    model: &dyn NonlinearModel,
    state: &GridField,
    grads: &[GridField],
) -> Result<GridField> {
    let n = model.dim();
    let size = model.size();
    let points = state.grid().points();
    let vals = state.values();
    let mut out = vec![0.0; size * points];
    let mut w = vec![0.0; size];
    let mut dw = vec![vec![0.0; size]; n];
    let mut r = vec![0.0; size];
    for p in 0..points {
        for c in 0..size {
            w[c] = vals[c * points + p];
            for j in 0..n {
                dw[j][c] = grads[j].values()[c * points + p];
            }
        }
        if !model.admissible(&w) {
            let x = state.grid().coordinate(p);
            return Err(Error::Domain(format!(
                "state leaves the admissible set at grid point {p} (x = {:?}): {:?}",
                &x[..n],
                w
            )));
        }
        let views: Vec<&[f64]> = dw.iter().map(|v| v.as_slice()).collect();
        model.residual_at(&w, &views, &mut r);
        for c in 0..size {
            out[c * points + p] = r[c];
        }
    }
    GridField::new(state.grid().clone(), size, out)
}

/// Resolves a built-in system id, or reads a system file when the id is a path.
pub fn builtin_system(id: &str) -> Result<LinearDissipativeSystem> {
    match id {
        "damped-euler-1d" => euler_system_with_speed(1, 1.0),
        "damped-euler-2d" => euler_system_with_speed(2, 1.0),
        "damped-euler-3d" => euler_system_with_speed(3, 1.0),
        "hp-test" => hyperbolic_parabolic_test_system(),
        "decoupled" => {
            let mut l = RMat::zeros(2, 2);
            l[(1, 1)] = 1.0;
            LinearDissipativeSystem::new(RMat::identity(2, 2), vec![RMat::zeros(2, 2)], l, None)
        }
        other => {
            let text = std::fs::read_to_string(other)
                .map_err(|e| Error::Input(format!("unknown system `{other}` ({e})")))?;
            LinearDissipativeSystem::from_text(&text)
        }
    }
}

/// Transport coupled to a heat equation in the second component:
/// `u_t + v_x = 0`, `v_t + u_x = v_xx`.
pub fn hyperbolic_parabolic_test_system() -> Result<LinearDissipativeSystem> {
    let a = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let b = RMat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    LinearDissipativeSystem::new(RMat::identity(2, 2), vec![a], RMat::zeros(2, 2), Some(vec![vec![b]]))
}
