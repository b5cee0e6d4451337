//! Littlewood-Paley decomposition on periodic grids, fractional derivative
//! multipliers, Besov norms and ratio harnesses for the standard
//! Bernstein, embedding and interpolation inequalities.
//!
//! Blocks are Fourier multipliers built from a smooth profile supported on
//! the annulus `3/4 <= r <= 8/3`, normalized over all integers `p` so that
//! the dyadic weights sum to one at every nonzero frequency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::grid::{Exponent, Grid, GridField};
use crate::linalg::C64;

pub const ANNULUS_LO: f64 = 0.75;
pub const ANNULUS_HI: f64 = 8.0 / 3.0;

/// Smooth bump `exp(-1/(r - 3/4) - 1/(8/3 - r))` on the open annulus.
pub fn profile(r: f64) -> f64 {
    if r <= ANNULUS_LO || r >= ANNULUS_HI {
        0.0
    } else {
        (-1.0 / (r - ANNULUS_LO) - 1.0 / (ANNULUS_HI - r)).exp()
    }
}

/// Indices `p` for which `profile(r / 2^p)` may be nonzero (at most two).
fn candidates(r: f64) -> std::ops::RangeInclusive<i32> {
    let lo = (r / ANNULUS_HI).log2().floor() as i32;
    let hi = (r / ANNULUS_LO).log2().ceil() as i32;
    lo..=hi
}

/// Normalized dyadic weight `phi_q(r) / sum_p phi_p(r)`.
pub fn block_weight(q: i32, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let num = profile(r / 2f64.powi(q));
    if num == 0.0 {
        return 0.0;
    }
    let den: f64 = candidates(r).map(|p| profile(r / 2f64.powi(p))).sum();
    num / den
}

/// Low-frequency cutoff `1 - sum_{q >= 0} phi_q(r)`.
pub fn low_weight(r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    let high: f64 = candidates(r).filter(|&p| p >= 0).map(|p| block_weight(p, r)).sum();
    (1.0 - high).max(0.0)
}

/// Block index used for the inhomogeneous low-frequency piece.
pub const LOW_BLOCK: i32 = -1;

/// Dyadic blocks covering the frequencies of one grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    q_min: i32,
    q_max: i32,
    /// Per flat mode: the lower block index touching it and the weights of
    /// blocks `lower` and `lower + 1`.
    weights: Vec<(i32, f64, f64)>,
    radii: Vec<f64>,
}

impl DyadicPartition {
    /// Chooses `q_min` as the first block reaching the lowest nonzero grid
    /// frequency and `q_max` as the last block starting below the largest
    /// one, so the blocks sum to one at every nonzero grid frequency.
    pub fn new(grid: &Grid) -> Result<Self> {
        if grid.shape().iter().any(|&m| m < 16) {
            return input("Littlewood-Paley partition needs at least 16 points per axis");
        }
        let q_min = (grid.min_radius() / ANNULUS_HI).log2().floor() as i32 + 1;
        let q_max = (grid.max_radius() / ANNULUS_LO).log2().ceil() as i32 - 1;
        if q_max - q_min + 1 < 3 {
            return input("grid resolves fewer than three dyadic blocks");
        }
        let radii: Vec<f64> = (0..grid.points()).map(|f| grid.mode_radius(f)).collect();
        let weights = radii
            .iter()
            .map(|&r| {
                if r == 0.0 {
                    return (i32::MIN, 0.0, 0.0);
                }
                let mut first = None;
                let mut w = [0.0; 2];
                for p in candidates(r) {
                    let v = block_weight(p, r);
                    if v > 0.0 {
                        let base = *first.get_or_insert(p);
                        w[(p - base) as usize] = v;
                    }
                }
                (first.unwrap_or(i32::MIN), w[0], w[1])
            })
            .collect();
        Ok(Self { grid: grid.clone(), q_min, q_max, weights, radii })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn blocks(&self) -> std::ops::RangeInclusive<i32> {
        self.q_min..=self.q_max
    }

    /// Weight of homogeneous block `q` at flat mode `f`.
    pub fn weight(&self, q: i32, f: usize) -> f64 {
        let (base, w0, w1) = self.weights[f];
        if q == base {
            w0
        } else if base != i32::MIN && q == base + 1 {
            w1
        } else {
            0.0
        }
    }

    /// Largest deviation of `sum_q phi_q` from one over nonzero grid modes.
    pub fn unity_defect(&self) -> f64 {
        (0..self.radii.len())
            .filter(|&f| self.radii[f] > 0.0)
            .map(|f| {
                let s: f64 = self.blocks().map(|q| self.weight(q, f)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Weight in a homogeneous or inhomogeneous decomposition, where the
    /// inhomogeneous block `LOW_BLOCK` is the low-frequency cutoff.
    pub fn weight_in(&self, q: i32, homogeneous: bool, f: usize) -> f64 {
        if !homogeneous && q == LOW_BLOCK {
            low_weight(self.radii[f])
        } else {
            self.weight(q, f)
        }
    }

    fn check_block(&self, q: i32, homogeneous: bool) -> Result<()> {
        let ok = if homogeneous {
            self.blocks().contains(&q)
        } else {
            q == LOW_BLOCK || (0..=self.q_max).contains(&q)
        };
        if ok {
            Ok(())
        } else {
            input(format!("block {q} outside the partition range [{}, {}]", self.q_min, self.q_max))
        }
    }

    /// Block indices of a homogeneous or inhomogeneous decomposition.
    pub fn indices(&self, homogeneous: bool) -> Vec<i32> {
        if homogeneous {
            self.blocks().collect()
        } else {
            std::iter::once(LOW_BLOCK).chain(0..=self.q_max).collect()
        }
    }

    /// `Delta_q f` (or the low-frequency piece for `LOW_BLOCK`).
    pub fn block(&self, f: &GridField, q: i32, homogeneous: bool) -> Result<GridField> {
        self.check_grid(f)?;
        self.check_block(q, homogeneous)?;
        Ok(f.map_spectrum(|mode, _, c| c * self.weight_in(q, homogeneous, mode)))
    }

    fn check_grid(&self, f: &GridField) -> Result<()> {
        if f.grid() != &self.grid {
            return input("field grid does not match the partition grid");
        }
        Ok(())
    }

    /// `L^p` norms of every block, in the order of `indices`. The `L^2`
    /// case is evaluated in Fourier space.
    pub fn block_norms(&self, f: &GridField, p: Exponent, homogeneous: bool) -> Result<Vec<(i32, f64)>> {
        self.check_grid(f)?;
        let idx = self.indices(homogeneous);
        if p == Exponent::Two {
            let spec = f.spectrum();
            let points = self.grid.points();
            let vol = self.grid.volume();
            let mut sums = vec![0.0; idx.len()];
            let offset = |q: i32| (q - idx[0]) as usize;
            for (i, c) in spec.iter().enumerate() {
                let mode = i % points;
                let a = c.norm_sqr();
                if a == 0.0 {
                    continue;
                }
                if homogeneous {
                    let (base, w0, w1) = self.weights[mode];
                    if base == i32::MIN {
                        continue;
                    }
                    if idx.contains(&base) {
                        sums[offset(base)] += w0 * w0 * a;
                    }
                    if idx.contains(&(base + 1)) {
                        sums[offset(base + 1)] += w1 * w1 * a;
                    }
                } else {
                    for (k, &q) in idx.iter().enumerate() {
                        let w = self.weight_in(q, false, mode);
                        sums[k] += w * w * a;
                    }
                }
            }
            return Ok(idx.into_iter().zip(sums).map(|(q, s)| (q, (vol * s).sqrt())).collect());
        }
        idx.into_iter()
            .map(|q| Ok((q, self.block(f, q, homogeneous)?.lp_norm(p))))
            .collect()
    }

    /// `||f||_{B^s_{p,r}}`: the `l^r` norm over blocks of `2^{qs} ||Delta_q f||_{L^p}`.
    pub fn besov_norm(&self, f: &GridField, spec: &BesovSpec) -> Result<f64> {
        if spec.homogeneous && spec.s <= -(self.grid.dim() as f64) / 2.0 {
            static WARNED: std::sync::Once = std::sync::Once::new();
            WARNED.call_once(|| {
                log::warn!("homogeneous Besov index s = {} <= -n/2: the mean mode is excluded", spec.s)
            });
        }
        let norms = self.block_norms(f, spec.p, spec.homogeneous)?;
        Ok(weighted_sum(&norms, spec.s, spec.r))
    }

    /// `L^1` norm of the kernel of block `q` (Young constant of the block).
    pub fn kernel_l1(&self, q: i32) -> f64 {
        let points = self.grid.points();
        let vol = self.grid.volume();
        let coeffs: Vec<C64> = (0..points).map(|f| C64::new(self.weight(q, f) / vol, 0.0)).collect();
        GridField::from_spectrum(self.grid.clone(), 1, coeffs)
            .expect("one component")
            .lp_norm(Exponent::One)
    }

    /// `L^2` norm of the kernel of block `q`.
    pub fn kernel_l2(&self, q: i32) -> f64 {
        let vol = self.grid.volume();
        ((0..self.grid.points()).map(|f| self.weight(q, f).powi(2)).sum::<f64>() / vol).sqrt()
    }
}

/// `l^r` combination of `2^{qs} v_q`.
pub fn weighted_sum(norms: &[(i32, f64)], s: f64, r: Exponent) -> f64 {
    let terms = norms.iter().map(|&(q, v)| 2f64.powf(q as f64 * s) * v);
    match r {
        Exponent::One => terms.sum(),
        Exponent::Two => terms.map(|t| t * t).sum::<f64>().sqrt(),
        Exponent::Inf => terms.fold(0.0, f64::max),
    }
}

/// Besov space index `(s, p, r)` with homogeneity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub s: f64,
    pub p: Exponent,
    pub r: Exponent,
    pub homogeneous: bool,
}

impl BesovSpec {
    pub fn homogeneous(s: f64, p: Exponent, r: Exponent) -> Self {
        Self { s, p, r, homogeneous: true }
    }

    pub fn inhomogeneous(s: f64, p: Exponent, r: Exponent) -> Self {
        Self { s, p, r, homogeneous: false }
    }
}

/// `Lambda^l f`: the multiplier `|xi|^l`, with the zero mode sent to zero.
pub fn frac_laplacian(f: &GridField, l: f64) -> Result<GridField> {
    if l < 0.0 {
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        let mean = (0..f.components()).map(|c| f.mean(c).abs()).fold(0.0, f64::max);
        if mean > 1e-12 * scale {
            return input("negative powers of Lambda need a mean-free field");
        }
    }
    Ok(f.apply_radial(|r| if r == 0.0 { 0.0 } else { r.powf(l) }))
}

/// Random real field whose spectrum lives in `k_lo <= |k| <= k_hi`.
pub fn random_band_limited(grid: &Grid, components: usize, k_lo: f64, k_hi: f64, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = grid.points();
    let coeffs: Vec<C64> = (0..components * points)
        .map(|i| {
            let r = grid.mode_radius(i % points);
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if r >= k_lo && r <= k_hi && r > 0.0 { c } else { C64::new(0.0, 0.0) }
        })
        .collect();
    GridField::from_spectrum(grid.clone(), components, coeffs).expect("consistent sizes")
}

/// Summary of a ratio harness over a sample set.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub name: String,
    pub samples: usize,
    pub skipped: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Largest relative change of the ratio under `f -> f(2 .)`.
    pub dilation_defect: f64,
}

impl RatioReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            skipped: 0,
            max_ratio: f64::NEG_INFINITY,
            min_ratio: f64::INFINITY,
            dilation_defect: 0.0,
        }
    }

    fn record(&mut self, ratio: Option<f64>, dilated: Option<f64>) {
        match ratio {
            Some(r) if r.is_finite() => {
                self.samples += 1;
                self.max_ratio = self.max_ratio.max(r);
                self.min_ratio = self.min_ratio.min(r);
                if let Some(d) = dilated {
                    self.dilation_defect = self.dilation_defect.max((d - r).abs() / r.abs());
                }
            }
            _ => self.skipped += 1,
        }
    }
}

/// `||Lambda^k f||_2 / (||Lambda^{k+m} f||_2^theta ||f||_{B^{-rho}_{2,inf}}^{1-theta})`
/// with `theta = (rho + k) / (rho + k + m)`.
pub fn interpolation_ratio(f: &GridField, k: f64, m: f64, rho: f64) -> Result<Option<f64>> {
    if k < 0.0 || m <= 0.0 || rho <= 0.0 {
        return input("interpolation needs k >= 0 and m, rho > 0");
    }
    let theta = (rho + k) / (rho + k + m);
    let part = DyadicPartition::new(f.grid())?;
    let num = frac_laplacian(f, k)?.l2_norm();
    let hi = frac_laplacian(f, k + m)?.l2_norm();
    let low = part.besov_norm(f, &BesovSpec::homogeneous(-rho, Exponent::Two, Exponent::Inf))?;
    let den = hi.powf(theta) * low.powf(1.0 - theta);
    Ok((den > 0.0).then(|| num / den))
}

pub fn verify_interpolation_suite(samples: &[GridField], k: f64, m: f64, rho: f64) -> Result<RatioReport> {
    let mut rep = RatioReport::new("interpolation");
    for f in samples {
        let r = interpolation_ratio(f, k, m, rho)?;
        let d = interpolation_ratio(&f.dilated(), k, m, rho)?;
        rep.record(r, d);
    }
    Ok(rep)
}

/// Interpolation exponent from `k + n(1/r - 1/q) = m(1 - theta) + rho theta`.
pub fn gns_theta(n: usize, k: f64, q: Exponent, m: f64, rho: f64, r: Exponent) -> Result<f64> {
    let lhs = k + n as f64 * (r.reciprocal() - q.reciprocal());
    let theta = if (rho - m).abs() < 1e-14 {
        if (lhs - m).abs() > 1e-12 {
            return input("exponent relation cannot be satisfied");
        }
        0.0
    } else {
        (lhs - m) / (rho - m)
    };
    if !(-1e-14..=1.0 + 1e-14).contains(&theta) {
        return input(format!("interpolation exponent theta = {theta} outside [0, 1]"));
    }
    if r.value() > q.value() {
        return input("need r <= q");
    }
    Ok(theta.clamp(0.0, 1.0))
}

/// `||Lambda^k f||_q / (||Lambda^m f||_r^{1-theta} ||Lambda^rho f||_r^theta)`.
pub fn gns_ratio(f: &GridField, k: f64, q: Exponent, m: f64, rho: f64, r: Exponent) -> Result<Option<f64>> {
    let theta = gns_theta(f.grid().dim(), k, q, m, rho, r)?;
    let num = frac_laplacian(f, k)?.lp_norm(q);
    let a = frac_laplacian(f, m)?.lp_norm(r);
    let b = frac_laplacian(f, rho)?.lp_norm(r);
    let den = a.powf(1.0 - theta) * b.powf(theta);
    Ok((den > 0.0).then(|| num / den))
}

pub fn gns_check(
    samples: &[GridField],
    k: f64,
    q: Exponent,
    m: f64,
    rho: f64,
    r: Exponent,
) -> Result<RatioReport> {
    let mut rep = RatioReport::new("gagliardo-nirenberg");
    for f in samples {
        rep.record(gns_ratio(f, k, q, m, rho, r)?, gns_ratio(&f.dilated(), k, q, m, rho, r)?);
    }
    Ok(rep)
}

/// Outcome of the `L^p -> B^{-rho}_{2,inf}` embedding check.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub ratios: RatioReport,
    /// Largest `2^{-q rho} C_q` over blocks, the grid's embedding constant.
    pub constant: f64,
    /// Largest `||Delta_q f||_2 / (C_q ||f||_p)` over samples and blocks.
    pub worst_block: f64,
    pub translation_defect: f64,
}

impl EmbeddingReport {
    pub fn per_block_holds(&self) -> bool {
        self.worst_block <= 1.0 + 1e-10
    }
}

/// Checks `||f||_{B^{-rho}_{2,inf}} <= C ||f||_{L^p}` with
/// `rho = n (1/p - 1/2)` and the per-block inequality
/// `||Delta_q f||_2 <= C_q ||f||_p`, where `C_q` is the `L^2` norm of the
/// block kernel for `p = 1` and `1` for `p = 2`.
pub fn lp_embedding_check(samples: &[GridField], p: Exponent) -> Result<EmbeddingReport> {
    if p == Exponent::Inf {
        return input("embedding check supports p in {1, 2}");
    }
    let first = samples.first().ok_or_else(|| crate::Error::Input("no samples".into()))?;
    let grid = first.grid().clone();
    let n = grid.dim() as f64;
    let rho = n * (p.reciprocal() - 0.5);
    let part = DyadicPartition::new(&grid)?;
    let consts: Vec<(i32, f64)> = part
        .blocks()
        .map(|q| (q, if p == Exponent::One { part.kernel_l2(q) } else { 1.0 }))
        .collect();
    let constant = consts
        .iter()
        .map(|&(q, c)| 2f64.powf(-(q as f64) * rho) * c)
        .fold(0.0, f64::max);
    let spec = BesovSpec::homogeneous(-rho, Exponent::Two, Exponent::Inf);
    let mut ratios = RatioReport::new("embedding");
    let mut worst_block = 0.0_f64;
    let mut translation_defect = 0.0_f64;
    for f in samples {
        let lp = f.lp_norm(p);
        if lp == 0.0 {
            ratios.record(None, None);
            continue;
        }
        let norms = part.block_norms(f, Exponent::Two, true)?;
        for (&(_, v), &(_, c)) in norms.iter().zip(&consts) {
            worst_block = worst_block.max(v / (c * lp));
        }
        let ratio = weighted_sum(&norms, -rho, Exponent::Inf) / lp;
        let shift: Vec<usize> = grid.shape().iter().map(|m| m / 3 + 1).collect();
        let moved = f.translated(&shift);
        let moved_ratio = part.besov_norm(&moved, &spec)? / moved.lp_norm(p);
        translation_defect = translation_defect.max((moved_ratio - ratio).abs() / ratio);
        ratios.record(Some(ratio), None);
    }
    Ok(EmbeddingReport { ratios, constant, worst_block, translation_defect })
}

/// `||Lambda g||_2 / ||g||_2` for `g = Delta_q f`, expected inside
/// `[3/4 2^q, 8/3 2^q]`.
pub fn bernstein_ratio(part: &DyadicPartition, f: &GridField, q: i32) -> Result<Option<f64>> {
    let g = part.block(f, q, true)?;
    let base = g.l2_norm();
    if base == 0.0 {
        return Ok(None);
    }
    Ok(Some(frac_laplacian(&g, 1.0)?.l2_norm() / base))
}
