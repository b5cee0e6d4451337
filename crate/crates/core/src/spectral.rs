//! Per-frequency analysis of a linear dissipative system: the symbol
//! `Phi(i xi)`, its spectrum, the kernel (Shizuta-Kawashima) condition, the
//! spectral gap, compensating matrices, the Lyapunov functional and the
//! matrix semigroup.

use nalgebra::{Cholesky, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::linalg::{
    complex_eigenvalues, expm, lambda_min, skew_part, sort_spectrum, spectral_norm,
    sym_eigen_sorted, sym_part, to_complex, CMat, RMat, C64,
};
use crate::system_model::LinearDissipativeSystem;

/// Unit directions used for sampling `omega`: `{+1, -1}` in 1D, 64 uniform
/// angles in 2D and the 26 face, edge and corner directions of the cube in 3D.
pub fn direction_samples(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let mut out = Vec::with_capacity(26);
            for x in -1i32..=1 {
                for y in -1i32..=1 {
                    for z in -1i32..=1 {
                        if (x, y, z) == (0, 0, 0) {
                            continue;
                        }
                        let v = [x as f64, y as f64, z as f64];
                        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        out.push(v.iter().map(|c| c / norm).collect());
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Uniformly random unit vectors.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                break v.iter().map(|c| c / norm).collect();
            }
        })
        .collect()
}

/// `count` radii log-uniformly spaced on `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect();
    out[0] = lo;
    out[count - 1] = hi;
    out
}

fn split_xi(xi: &[f64]) -> (f64, Vec<f64>) {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        (0.0, vec![0.0; xi.len()])
    } else {
        (r, xi.iter().map(|v| v / r).collect())
    }
}

/// `Z(xi) = i |xi| A(omega) + |xi|^2 B(omega) + L`, so that
/// `A0 w_t + Z w = 0` mode by mode.
pub fn generator(sys: &LinearDissipativeSystem, xi: &[f64]) -> CMat {
    let (r, omega) = split_xi(xi);
    let a = sys.flux_symbol(&omega);
    let b = sys.viscosity_symbol(&omega);
    let re = sys.damping() + b * (r * r);
    CMat::from_fn(sys.size(), sys.size(), |i, j| C64::new(re[(i, j)], r * a[(i, j)]))
}

/// Generator at a discrete grid mode. First-order terms use `k_odd` (the
/// wavevector with Nyquist components removed), second-order diagonal terms
/// use the full wavevector.
pub fn grid_generator(sys: &LinearDissipativeSystem, k_odd: &[f64], k_full: &[f64]) -> CMat {
    let size = sys.size();
    let mut re = sys.damping().clone();
    let mut im = RMat::zeros(size, size);
    for (j, aj) in sys.fluxes().iter().enumerate() {
        im += aj * k_odd[j];
    }
    if let Some(b) = sys.viscosity() {
        for j in 0..sys.dim() {
            for k in 0..sys.dim() {
                let w = if j == k { k_full[j] * k_full[j] } else { k_odd[j] * k_odd[k] };
                re += &b[j][k] * w;
            }
        }
    }
    CMat::from_fn(size, size, |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// `Phi(i xi) = -A0^{-1} Z(xi)`.
pub fn symbol_matrix(sys: &LinearDissipativeSystem, xi: &[f64]) -> CMat {
    let a0_inv = to_complex(&a0_inverse(sys));
    -(a0_inv * generator(sys, xi))
}

pub(crate) fn a0_inverse(sys: &LinearDissipativeSystem) -> RMat {
    sys.a0().clone().try_inverse().unwrap_or_else(|| RMat::from_element(sys.size(), sys.size(), f64::NAN))
}

/// A symbol together with its sorted spectrum.
#[derive(Debug, Clone)]
pub struct FourierSymbol {
    pub xi: Vec<f64>,
    pub matrix: CMat,
    pub eigenvalues: Vec<C64>,
}

impl FourierSymbol {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues[0].re
    }
}

pub fn symbol(sys: &LinearDissipativeSystem, xi: &[f64]) -> Result<FourierSymbol> {
    if xi.len() != sys.dim() {
        return input("frequency has the wrong dimension");
    }
    let matrix = symbol_matrix(sys, xi);
    let mut eigenvalues = complex_eigenvalues(&matrix)
        .map_err(|e| Error::Numerical(format!("{e} at xi = {xi:?}")))?;
    sort_spectrum(&mut eigenvalues);
    Ok(FourierSymbol { xi: xi.to_vec(), matrix, eigenvalues })
}

fn cholesky_factor(sys: &LinearDissipativeSystem) -> Result<RMat> {
    Cholesky::new(sym_part(sys.a0()))
        .map(|c| c.l())
        .ok_or_else(|| Error::Input("A0 is not positive definite".into()))
}

/// Eigenvalues of the pencil `lambda A0 + Z(xi)`, computed from the
/// congruent matrix `-C^{-1} Z C^{-T}` with `A0 = C C^T`.
pub fn pencil_eigenvalues(sys: &LinearDissipativeSystem, xi: &[f64]) -> Result<Vec<C64>> {
    let c = cholesky_factor(sys)?;
    let c_inv = to_complex(&c.try_inverse().expect("Cholesky factor is invertible"));
    let m = -(&c_inv * generator(sys, xi) * c_inv.transpose());
    let mut ev = complex_eigenvalues(&m)?;
    sort_spectrum(&mut ev);
    Ok(ev)
}

/// `e^{t Phi(i xi)}`.
pub fn semigroup(sys: &LinearDissipativeSystem, xi: &[f64], t: f64) -> Result<CMat> {
    if !(t >= 0.0) {
        return input("semigroup time must be nonnegative");
    }
    expm(&(symbol_matrix(sys, xi) * C64::new(t, 0.0)))
        .map_err(|e| Error::Numerical(format!("{e} at xi = {xi:?}, t = {t}")))
}

/// Evidence that an eigenvector of the flux pencil lies in `ker L`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelWitness {
    pub omega: Vec<f64>,
    pub lambda: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub passed: bool,
    /// Smallest singular value of `(I - P)` restricted to an eigenspace,
    /// over all directions and eigenspaces.
    pub min_separation: f64,
    pub witness: Option<KernelWitness>,
}

/// Checks that no eigenvector of `A(omega) phi = mu A0 phi` lies in `ker L`.
pub fn check_sk_kernel(sys: &LinearDissipativeSystem, omegas: &[Vec<f64>]) -> Result<KernelCheck> {
    if omegas.is_empty() {
        return input("at least one direction sample is required");
    }
    let c = cholesky_factor(sys)?;
    let c_inv = c.clone().try_inverse().expect("Cholesky factor is invertible");
    let size = sys.size();
    let perp = RMat::identity(size, size) - sys.projector();
    let tol = 1e-8;
    let mut min_sep = f64::INFINITY;
    for omega in omegas {
        let m = &c_inv * sys.flux_symbol(omega) * c_inv.transpose();
        let (mu, y) = sym_eigen_sorted(&m);
        let phis = c_inv.transpose() * y;
        let gap = 1e-8 * spectral_norm(&m).max(1.0);
        let mut start = 0;
        while start < size {
            let mut end = start + 1;
            while end < size && mu[end] - mu[end - 1] <= gap {
                end += 1;
            }
            let basis = phis.columns(start, end - start).into_owned().qr().q();
            let projected = &perp * &basis;
            let svd = projected.clone().svd(false, true);
            let (k, sigma) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
            // A thin matrix has fewer singular values than columns; the
            // missing ones are zero.
            let (sigma, coeffs) = if svd.singular_values.len() < basis.ncols() {
                let full = projected.transpose() * &projected;
                let (vals, vecs) = sym_eigen_sorted(&full);
                (vals[0].max(0.0).sqrt(), vecs.column(0).into_owned())
            } else {
                (sigma, svd.v_t.as_ref().expect("requested").row(k).transpose())
            };
            min_sep = min_sep.min(sigma);
            if sigma < tol {
                let mut v = &basis * coeffs;
                v /= v.norm();
                let lead = v.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
                if lead < 0.0 {
                    v = -v;
                }
                let lambda = -(mu.rows(start, end - start).sum() / (end - start) as f64);
                return Ok(KernelCheck {
                    passed: false,
                    min_separation: sigma,
                    witness: Some(KernelWitness {
                        omega: omega.clone(),
                        lambda: if lambda == 0.0 { 0.0 } else { lambda },
                        vector: v.iter().map(|x| if *x == 0.0 { 0.0 } else { *x }).collect(),
                    }),
                });
            }
            start = end;
        }
    }
    Ok(KernelCheck { passed: true, min_separation: min_sep, witness: None })
}

/// Worst real part over a `(radius, direction)` grid and the fitted gap
/// constant `c* = inf (-max Re lambda) (1 + r^2) / r^2`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralGapReport {
    pub radii: Vec<f64>,
    pub omegas: Vec<Vec<f64>>,
    /// `worst[i][k]`: largest real part at radius `i`, direction `k`.
    pub worst: Vec<Vec<f64>>,
    pub c_star: f64,
    pub argmin: (usize, usize),
    pub passed: bool,
}

impl SpectralGapReport {
    pub fn ratio(&self, i: usize, k: usize) -> f64 {
        let r = self.radii[i];
        -self.worst[i][k] * (1.0 + r * r) / (r * r)
    }
}

pub fn spectral_gap_fit(
    sys: &LinearDissipativeSystem,
    radii: &[f64],
    omegas: &[Vec<f64>],
) -> Result<SpectralGapReport> {
    if radii.is_empty() || omegas.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return input("the frequency grid must be nonempty and exclude zero");
    }
    let worst = radii
        .par_iter()
        .map(|&r| {
            omegas
                .iter()
                .map(|w| {
                    let xi: Vec<f64> = w.iter().map(|c| c * r).collect();
                    symbol(sys, &xi).map(|s| s.max_real())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = SpectralGapReport {
        radii: radii.to_vec(),
        omegas: omegas.to_vec(),
        worst,
        c_star: f64::INFINITY,
        argmin: (0, 0),
        passed: false,
    };
    for i in 0..radii.len() {
        for k in 0..omegas.len() {
            let ratio = rep.ratio(i, k);
            if ratio < rep.c_star {
                rep.c_star = ratio;
                rep.argmin = (i, k);
            }
        }
    }
    rep.passed = rep.c_star > 1e-12;
    Ok(rep)
}

/// Controls for compensating-matrix synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    pub max_iter: usize,
    /// Number of starting points; capped at 200.
    pub restarts: usize,
    /// Step scale; iteration `k` moves by `step / sqrt(k)` along the
    /// normalized subgradient.
    pub step: f64,
    /// Upper end of the amplitude search.
    pub t_max: f64,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { max_iter: 400, restarts: 8, step: 0.5, t_max: 10.0, seed: 0 }
    }
}

/// `K(omega)` with `K A0` skew and `[K A(omega)]' + L` positive definite.
#[derive(Debug, Clone, Serialize)]
pub struct CompensatingMatrix {
    pub omega: Vec<f64>,
    #[serde(serialize_with = "serialize_matrix")]
    pub k: RMat,
    pub achieved_min_eig: f64,
    /// Largest weight for which the Lyapunov functional stays equivalent to
    /// `|w|^2` and dissipative at this direction.
    pub kappa_max: f64,
    pub kappa: f64,
}

fn serialize_matrix<S: serde::Serializer>(m: &RMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn objective(s: &RMat, m: &RMat, l: &RMat) -> (f64, DVector<f64>) {
    let (vals, vecs) = sym_eigen_sorted(&(sym_part(&(s * m)) + l));
    (vals[0], vecs.column(0).into_owned())
}

fn ascend(m: &RMat, l: &RMat, start: RMat, opts: &SynthesisOptions) -> (f64, RMat) {
    let mut s = start;
    let (mut best, _) = objective(&s, m, l);
    let mut best_s = s.clone();
    for it in 1..=opts.max_iter {
        let (f, v) = objective(&s, m, l);
        if f > best {
            best = f;
            best_s = s.clone();
        }
        let g = skew_part(&(&v * (m * &v).transpose()));
        let gn = g.norm();
        if gn < 1e-14 {
            break;
        }
        s += g * (opts.step / (it as f64).sqrt() / gn);
        let sn = s.norm();
        if sn > 1.0 {
            s /= sn;
        }
    }
    (best, best_s)
}

/// Golden-section maximization of a concave function on `[0, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
        if b - a < 1e-13 * hi {
            break;
        }
    }
    if f1 > f2 { (x1, f1) } else { (x2, f2) }
}

/// Whether `omega` lies in the half-sphere on which `K` is synthesized
/// directly (first nonzero component positive).
fn canonical(omega: &[f64]) -> bool {
    omega.iter().find(|v| **v != 0.0).is_none_or(|v| *v > 0.0)
}

/// Synthesizes `K(omega) = t* S A0^{-1}` by projected subgradient ascent of
/// `lambda_min([S A0^{-1} A(omega)]' + L)` over skew `S` with `|S|_F <= 1`,
/// followed by a search over the amplitude `t`. Directions outside the
/// canonical half-sphere use `K(omega) = -K(-omega)`.
pub fn build_compensating_matrix(
    sys: &LinearDissipativeSystem,
    omega: &[f64],
    opts: &SynthesisOptions,
) -> Result<CompensatingMatrix> {
    if omega.len() != sys.dim() {
        return input("direction has the wrong dimension");
    }
    if !canonical(omega) {
        let flipped: Vec<f64> = omega.iter().map(|v| -v).collect();
        let mut k = build_compensating_matrix(sys, &flipped, opts)?;
        k.omega = omega.to_vec();
        k.k = -k.k;
        return Ok(k);
    }
    let size = sys.size();
    let a0_inv = a0_inverse(sys);
    let m = &a0_inv * sys.flux_symbol(omega);
    let l = sys.damping();
    let restarts = opts.restarts.clamp(1, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_s = RMat::zeros(size, size);
    for r in 0..restarts {
        let start = if r == 0 {
            RMat::zeros(size, size)
        } else {
            let g = RMat::from_fn(size, size, |_, _| rng.gen_range(-1.0..1.0));
            let s = skew_part(&g);
            let n = s.norm();
            if n > 0.0 { s * (rng.gen_range(0.1..1.0) / n) } else { s }
        };
        let (f, s) = ascend(&m, l, start, opts);
        if f > best {
            best = f;
            best_s = s;
        }
    }
    let norm = best_s.norm();
    let (s, achieved) = if norm > 0.0 {
        let dir = &best_s / norm;
        let (t, f) = golden_max(|t| objective(&(&dir * t), &m, l).0, opts.t_max);
        if f >= best { (dir * t, f) } else { (best_s, best) }
    } else {
        (best_s, best)
    };
    if !(achieved > 0.0) {
        return Err(Error::Synthesis { best: achieved, iterations: opts.max_iter * restarts });
    }
    let k = &s * &a0_inv;
    let kappa_max = kappa_bound(sys, &k, achieved);
    Ok(CompensatingMatrix {
        omega: omega.to_vec(),
        k,
        achieved_min_eig: achieved,
        kappa_max,
        kappa: 0.5 * kappa_max,
    })
}

/// `min(lambda_min(A0) / |K A0|, 2 delta / (2 delta + |K|^2 |L|))`: the first
/// term keeps the functional equivalent to `|w|^2`, the second keeps its
/// time derivative below `-(delta kappa / 2) rho(xi) |w|^2`.
fn kappa_bound(sys: &LinearDissipativeSystem, k: &RMat, delta: f64) -> f64 {
    let ka0 = spectral_norm(&(k * sys.a0()));
    let equiv = if ka0 > 0.0 { lambda_min(sys.a0()) / ka0 } else { f64::INFINITY };
    let kn = spectral_norm(k);
    let decay = 2.0 * delta / (2.0 * delta + kn * kn * spectral_norm(sys.damping()));
    equiv.min(decay)
}

/// Compensating matrices on a direction set sharing one Lyapunov weight.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovFamily {
    pub matrices: Vec<CompensatingMatrix>,
    pub kappa: f64,
    /// Uniform dissipation constant `c1 = min achieved_min_eig`.
    pub c1: f64,
    /// `c_lo |w|^2 <= E <= c_hi |w|^2`.
    pub c_lo: f64,
    pub c_hi: f64,
}

impl LyapunovFamily {
    pub fn matrix_for(&self, omega: &[f64]) -> Option<&CompensatingMatrix> {
        self.matrices
            .iter()
            .find(|m| m.omega.iter().zip(omega).all(|(a, b)| (a - b).abs() < 1e-12))
    }
}

/// Builds `K(omega)` on every direction and fixes `kappa` as half the
/// smallest admissible weight.
pub fn lyapunov_family(
    sys: &LinearDissipativeSystem,
    omegas: &[Vec<f64>],
    opts: &SynthesisOptions,
) -> Result<LyapunovFamily> {
    if omegas.is_empty() {
        return input("at least one direction sample is required");
    }
    let mut matrices = omegas
        .par_iter()
        .map(|w| build_compensating_matrix(sys, w, opts))
        .collect::<Result<Vec<_>>>()?;
    let kappa = 0.5 * matrices.iter().map(|m| m.kappa_max).fold(f64::INFINITY, f64::min);
    let c1 = matrices.iter().map(|m| m.achieved_min_eig).fold(f64::INFINITY, f64::min);
    let ka0 = matrices
        .iter()
        .map(|m| spectral_norm(&(&m.k * sys.a0())))
        .fold(0.0_f64, f64::max);
    let (vals, _) = sym_eigen_sorted(sys.a0());
    let c_lo = 0.5 * (vals[0] - 0.5 * kappa * ka0);
    let c_hi = 0.5 * (vals[vals.len() - 1] + 0.5 * kappa * ka0);
    for m in &mut matrices {
        m.kappa = kappa;
    }
    Ok(LyapunovFamily { matrices, kappa, c1, c_lo, c_hi })
}

/// `E[w] = (A0 w, w)/2 + (kappa/2) Im((|xi|/(1+|xi|^2)) K(omega) A0 w, w)`
/// with `(x, y) = y^* x`.
pub fn lyapunov_energy(
    sys: &LinearDissipativeSystem,
    xi: &[f64],
    w: &DVector<C64>,
    k: &CompensatingMatrix,
    kappa: f64,
) -> Result<f64> {
    if !(0.0..=k.kappa_max).contains(&kappa) {
        return input(format!("kappa = {kappa} outside the admissible range [0, {}]", k.kappa_max));
    }
    if w.len() != sys.size() {
        return input("mode vector has the wrong length");
    }
    let (r, _) = split_xi(xi);
    let a0 = to_complex(sys.a0());
    let base = 0.5 * crate::linalg::hermitian_form(&a0, w).re;
    if kappa == 0.0 || r == 0.0 {
        return Ok(base);
    }
    let ka0 = to_complex(&(&k.k * sys.a0()));
    let cross = crate::linalg::hermitian_form(&ka0, w).im;
    Ok(base + 0.5 * kappa * r / (1.0 + r * r) * cross)
}

/// `rho(xi) = |xi|^2 / (1 + |xi|^2)`.
pub fn rho(r: f64) -> f64 {
    r * r / (1.0 + r * r)
}

/// Finite-difference `dE/dt + (c1 kappa / 2) rho(xi) |w|^2`, relative to
/// `|w|^2`, at time `t` along `w(t) = e^{t Phi} w0`.
pub fn lyapunov_defect(
    sys: &LinearDissipativeSystem,
    xi: &[f64],
    w0: &DVector<C64>,
    family: &LyapunovFamily,
    t: f64,
) -> Result<f64> {
    let (r, omega) = split_xi(xi);
    let k = family
        .matrix_for(&omega)
        .ok_or_else(|| Error::Input("direction not in the Lyapunov family".into()))?;
    let phi = symbol_matrix(sys, xi);
    let scale = phi.norm().max(1.0);
    let h = 1e-3 / scale;
    let energy = |s: f64| -> Result<f64> {
        let w = expm(&(&phi * C64::new(s, 0.0)))? * w0;
        lyapunov_energy(sys, xi, &w, k, family.kappa)
    };
    let d = (-energy(t + 2.0 * h)? + 8.0 * energy(t + h)? - 8.0 * energy(t - h)? + energy(t - 2.0 * h)?)
        / (12.0 * h);
    let w = expm(&(&phi * C64::new(t, 0.0)))? * w0;
    let norm2 = crate::linalg::cnorm2(&w);
    Ok((d + 0.5 * family.c1 * family.kappa * rho(r) * norm2) / norm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system_model::{euler_system_with_speed, hyperbolic_parabolic_test_system};
    use proptest::prelude::{prop_assert, proptest};

    fn euler(n: usize) -> LinearDissipativeSystem {
        euler_system_with_speed(n, 1.0).unwrap()
    }

    fn decoupled() -> LinearDissipativeSystem {
        let mut l = RMat::zeros(2, 2);
        l[(1, 1)] = 1.0;
        LinearDissipativeSystem::new(RMat::identity(2, 2), vec![RMat::zeros(2, 2)], l, None).unwrap()
    }

    #[test]
    fn symbol_at_zero_and_acoustic_roots() {
        let s = symbol(&euler(1), &[0.0]).unwrap();
        assert!(s.eigenvalues[0].norm() < 1e-14);
        assert!((s.eigenvalues[1] - C64::new(-1.0, 0.0)).norm() < 1e-14);

        let s = symbol(&euler(1), &[0.1]).unwrap();
        let disc = (1.0f64 - 0.04).sqrt();
        assert!((s.eigenvalues[0].re - (-1.0 + disc) / 2.0).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - (-1.0 - disc) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn three_d_shear_modes() {
        for w in random_directions(3, 10, 7) {
            let xi: Vec<f64> = w.iter().map(|c| 0.1 * c).collect();
            let s = symbol(&euler(3), &xi).unwrap();
            let disc = (1.0f64 - 0.04).sqrt();
            assert!((s.eigenvalues[0].re - (-1.0 + disc) / 2.0).abs() < 1e-10);
            assert!((s.eigenvalues[1].re - (-1.0 - disc) / 2.0).abs() < 1e-10);
            for k in 2..4 {
                assert!((s.eigenvalues[k] - C64::new(-1.0, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn kernel_condition_examples() {
        assert!(check_sk_kernel(&euler(1), &direction_samples(1)).unwrap().passed);
        assert!(check_sk_kernel(&euler(3), &direction_samples(3)).unwrap().passed);
        let bad = check_sk_kernel(&decoupled(), &direction_samples(1)).unwrap();
        assert!(!bad.passed);
        let w = bad.witness.unwrap();
        assert_eq!(w.lambda, 0.0);
        assert!((w.vector[0] - 1.0).abs() < 1e-14 && w.vector[1].abs() < 1e-14);
        let full = euler(1).with_damping(RMat::identity(2, 2)).unwrap();
        assert!(check_sk_kernel(&full, &direction_samples(1)).unwrap().passed);
    }

    #[test]
    fn gap_constant_for_euler_and_full_damping() {
        let radii = log_radii(1e-2, 1e2, 81);
        let rep = spectral_gap_fit(&euler(1), &radii, &direction_samples(1)).unwrap();
        assert!(rep.passed && rep.c_star > 0.45 && rep.c_star <= 0.51, "{}", rep.c_star);
        let bad = spectral_gap_fit(&decoupled(), &radii, &direction_samples(1)).unwrap();
        assert!(!bad.passed && bad.c_star <= 1e-12);
        let sys = LinearDissipativeSystem::new(RMat::identity(2, 2), vec![RMat::zeros(2, 2)], RMat::identity(2, 2), None)
            .unwrap();
        let rep = spectral_gap_fit(&sys, &radii, &direction_samples(1)).unwrap();
        assert!((rep.c_star - (1.0 + 1e4) / 1e4).abs() < 1e-10);
        assert_eq!(rep.argmin.0, radii.len() - 1);
    }

    #[test]
    fn compensating_matrix_reaches_analytic_optimum() {
        let sys = euler(1);
        let k = build_compensating_matrix(&sys, &[1.0], &SynthesisOptions::default()).unwrap();
        assert!(k.achieved_min_eig > 0.49, "{}", k.achieved_min_eig);
        let ka0 = &k.k * sys.a0();
        assert!((&ka0 + ka0.transpose()).amax() < 1e-10);
        let neg = build_compensating_matrix(&sys, &[-1.0], &SynthesisOptions::default()).unwrap();
        assert_eq!(neg.k, -k.k.clone());

        let sys3 = euler(3);
        let w = vec![0.0, 0.6, 0.8];
        let k3 = build_compensating_matrix(&sys3, &w, &SynthesisOptions::default()).unwrap();
        assert!(k3.achieved_min_eig > 0.45, "{}", k3.achieved_min_eig);
    }

    #[test]
    fn synthesis_fails_without_kernel_condition() {
        let r = build_compensating_matrix(&decoupled(), &[1.0], &SynthesisOptions::default());
        assert!(matches!(r, Err(Error::Synthesis { .. })));
    }

    #[test]
    fn semigroup_basics() {
        let sys = euler(1);
        assert!((semigroup(&sys, &[0.7], 0.0).unwrap() - CMat::identity(2, 2)).norm() < 1e-15);
        let e = semigroup(&sys, &[0.0], 2.0).unwrap();
        assert!((e[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::new((-2.0f64).exp(), 0.0)).norm() < 1e-14);
        let ab = semigroup(&sys, &[3.0], 1.3).unwrap() * semigroup(&sys, &[3.0], 0.4).unwrap();
        let c = semigroup(&sys, &[3.0], 1.7).unwrap();
        assert!((ab - &c).norm() <= 1e-8 * c.norm());
        assert!(semigroup(&sys, &[1.0], -1.0).is_err());
    }

    #[test]
    fn semigroup_uniform_bound() {
        let sys = euler(1);
        let radii = log_radii(1e-2, 1e2, 41);
        let c_star = 0.9 * spectral_gap_fit(&sys, &radii, &direction_samples(1)).unwrap().c_star;
        for &r in &radii {
            for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0] {
                let e = semigroup(&sys, &[r], t).unwrap();
                let norm = e.svd(false, false).singular_values.max();
                assert!(norm * (c_star * t * rho(r)).exp() <= 5.0, "r={r} t={t}");
            }
        }
    }

    #[test]
    fn energy_is_conserved_without_damping() {
        let sys = euler(3).with_damping(RMat::zeros(4, 4)).unwrap();
        let v = DVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.2, 0.1), C64::new(0.3, 0.0), C64::new(0.0, -0.7)]);
        let a0 = to_complex(sys.a0());
        let e0 = crate::linalg::hermitian_form(&a0, &v).re;
        for t in [0.5, 3.0, 20.0] {
            let w = semigroup(&sys, &[0.3, -1.2, 2.0], t).unwrap() * &v;
            let e = crate::linalg::hermitian_form(&a0, &w).re;
            assert!((e - e0).abs() < 1e-8 * e0);
        }
    }

    #[test]
    fn hp_symbol_with_zero_viscosity_matches_hyperbolic() {
        let hp = hyperbolic_parabolic_test_system().unwrap();
        let zero_b = LinearDissipativeSystem::new(
            hp.a0().clone(),
            hp.fluxes().to_vec(),
            RMat::identity(2, 2),
            Some(vec![vec![RMat::zeros(2, 2)]]),
        )
        .unwrap();
        let plain = LinearDissipativeSystem::new(hp.a0().clone(), hp.fluxes().to_vec(), RMat::identity(2, 2), None).unwrap();
        assert_eq!(symbol_matrix(&zero_b, &[1.7]), symbol_matrix(&plain, &[1.7]));
    }

    #[test]
    fn lyapunov_energy_edge_cases() {
        let sys = euler(1);
        let fam = lyapunov_family(&sys, &direction_samples(1), &SynthesisOptions::default()).unwrap();
        let k = &fam.matrices[0];
        let w = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.3)]);
        let e0 = lyapunov_energy(&sys, &[1.0], &w, k, 0.0).unwrap();
        assert!((e0 - 0.5 * crate::linalg::cnorm2(&w)).abs() < 1e-14);
        assert_eq!(lyapunov_energy(&sys, &[1.0], &DVector::zeros(2), k, fam.kappa).unwrap(), 0.0);
        assert!(lyapunov_energy(&sys, &[1.0], &w, k, 10.0 * k.kappa_max).is_err());
        assert!(fam.c_lo > 0.0 && fam.c_hi >= fam.c_lo);
    }

    #[test]
    fn lyapunov_inequality_on_sampled_modes() {
        let sys = euler(1);
        let fam = lyapunov_family(&sys, &direction_samples(1), &SynthesisOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let r = 10f64.powf(rng.gen_range(-2.0..2.0));
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let w0 = DVector::from_fn(2, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let t = rng.gen_range(0.0..5.0);
            let d = lyapunov_defect(&sys, &[sign * r], &w0, &fam, t).unwrap();
            assert!(d <= 1e-6, "defect {d} at r={r}");
        }
    }

    proptest! {
        #[test]
        fn conjugation_symmetry(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let sys = euler(2);
            let a = symbol_matrix(&sys, &[x, y]);
            let b = symbol_matrix(&sys, &[-x, -y]);
            prop_assert!((a.map(|c| c.conj()) - b).norm() < 1e-14);
        }

        #[test]
        fn pencil_and_symbol_spectra_agree(x in -5.0f64..5.0, seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = RMat::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let a0 = &g * g.transpose() + RMat::identity(3, 3);
            let a1 = sym_part(&RMat::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0)));
            let l = RMat::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 2.0]));
            let sys = LinearDissipativeSystem::new(a0, vec![a1], l, None).unwrap();
            let a = symbol(&sys, &[x]).unwrap().eigenvalues;
            let b = pencil_eigenvalues(&sys, &[x]).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).norm() < 1e-8 * (1.0 + p.norm()));
            }
        }

        #[test]
        fn real_parts_vary_continuously(i in 0usize..200) {
            let sys = euler(1);
            let r0 = 0.05 * i as f64;
            let dr = 1e-3;
            let a = symbol(&sys, &[r0]).unwrap().eigenvalues;
            let b = symbol(&sys, &[r0 + dr]).unwrap().eigenvalues;
            let bound = 10.0 * dr * spectral_norm(sys.flux(0));
            for (p, q) in a.iter().zip(&b) {
                // Near the branch point |xi| = 1/2 real parts move like a square root.
                let slack = if (r0 - 0.5).abs() < 0.02 { 0.1 } else { 0.0 };
                prop_assert!((p.re - q.re).abs() <= bound + slack);
            }
        }
    }
}
