//! Periodic grids and multi-component real fields with cached Fourier
//! coefficients.
//!
//! Coefficients are normalized so that `f(x) = sum_k c_k e^{i k.x}`, hence
//! `||f||_{L^2}^2 = |box| * sum_k |c_k|^2`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::OnceLock;

use crate::error::{input, Error, Result};
use crate::fft::NdFft;
use crate::linalg::C64;

/// Lebesgue exponent restricted to the supported set {1, 2, inf}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Exponent::One)
        } else if p == 2.0 {
            Ok(Exponent::Two)
        } else if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Inf)
        } else {
            input(format!("unsupported Lebesgue exponent {p}; expected 1, 2 or inf"))
        }
    }

    /// `1/p`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Two => 0.5,
            Exponent::Inf => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Two => 2.0,
            Exponent::Inf => f64::INFINITY,
        }
    }
}

/// Uniform periodic grid on a box `prod_j [0, L_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    lengths: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return input(format!("grid dimension must be 1, 2 or 3, got {}", shape.len()));
        }
        if shape.len() != lengths.len() {
            return input("shape and box lengths differ in dimension");
        }
        if let Some(m) = shape.iter().find(|m| !m.is_power_of_two() || **m < 2) {
            return input(format!("resolution {m} is not a power of two >= 2"));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return input("box lengths must be positive and finite");
        }
        Ok(Self { shape, lengths })
    }

    /// `n`-dimensional cube with `resolution` points per axis.
    pub fn cube(n: usize, resolution: usize, length: f64) -> Result<Self> {
        Self::new(vec![resolution; n], vec![length; n])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn points(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.points() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.shape[axis] as f64
    }

    /// Multi-index of a flat (row-major) position.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    /// Signed integer frequency of index `i` on an axis of size `m`.
    pub fn signed_index(i: usize, m: usize) -> i64 {
        if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        2.0 * PI * Self::signed_index(i, self.shape[axis]) as f64 / self.lengths[axis]
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.shape[axis] / 2
    }

    /// Wavevector of a flat spectral position.
    pub fn mode(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut k = [0.0; 3];
        for axis in 0..self.dim() {
            k[axis] = self.wavenumber(axis, idx[axis]);
        }
        k
    }

    /// Wavevector with Nyquist components zeroed, used for odd-order
    /// derivatives so that real fields stay real.
    pub fn odd_mode(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut k = self.mode(flat);
        for axis in 0..self.dim() {
            if self.is_nyquist(axis, idx[axis]) {
                k[axis] = 0.0;
            }
        }
        k
    }

    pub fn mode_radius(&self, flat: usize) -> f64 {
        let k = self.mode(flat);
        k.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Smallest per-axis Nyquist wavenumber `pi M_j / L_j`.
    pub fn nyquist(&self) -> f64 {
        (0..self.dim())
            .map(|a| PI * self.shape[a] as f64 / self.lengths[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|k|` represented on the grid (corner mode).
    pub fn max_radius(&self) -> f64 {
        (0..self.dim())
            .map(|a| (PI * self.shape[a] as f64 / self.lengths[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest nonzero `|k|`.
    pub fn min_radius(&self) -> f64 {
        (0..self.dim())
            .map(|a| 2.0 * PI / self.lengths[a])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn coordinate(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = idx[axis] as f64 * self.spacing(axis);
        }
        x
    }

    /// Same samples on a box of half the size: the dyadic dilation
    /// `f -> f(2 .)` in whole-space scaling, with every frequency doubled.
    pub fn halved(&self) -> Grid {
        Grid {
            shape: self.shape.clone(),
            lengths: self.lengths.iter().map(|l| l * 0.5).collect(),
        }
    }
}

/// `N`-component real field on a periodic grid, stored component-major.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<C64>>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.components == other.components && self.values == other.values
    }
}

impl GridField {
    pub fn new(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return input("a field needs at least one component");
        }
        if values.len() != components * grid.points() {
            return input(format!(
                "expected {} values for {} components, got {}",
                components * grid.points(),
                components,
                values.len()
            ));
        }
        Ok(Self { grid, components, values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: Grid, components: usize) -> Self {
        let values = vec![0.0; components * grid.points()];
        Self { grid, components, values, spectrum: OnceLock::new() }
    }

    /// Samples `f(x, out)` at every grid point.
    pub fn from_fn(grid: Grid, components: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let points = grid.points();
        let mut values = vec![0.0; components * points];
        let mut out = vec![0.0; components];
        for p in 0..points {
            let x = grid.coordinate(p);
            f(&x[..grid.dim()], &mut out);
            for c in 0..components {
                values[c * points + p] = out[c];
            }
        }
        Self { grid, components, values, spectrum: OnceLock::new() }
    }

    /// Builds a field from (normalized) Fourier coefficients; the imaginary
    /// part of the synthesized values is discarded.
    pub fn from_spectrum(grid: Grid, components: usize, mut coeffs: Vec<C64>) -> Result<Self> {
        let points = grid.points();
        if coeffs.len() != components * points {
            return input("coefficient count does not match grid and components");
        }
        let fft = NdFft::for_shape(grid.shape());
        let mut values = Vec::with_capacity(components * points);
        for chunk in coeffs.chunks_mut(points) {
            chunk.iter_mut().for_each(|c| *c *= points as f64);
            fft.inverse(chunk);
            values.extend(chunk.iter().map(|c| c.re));
        }
        Ok(Self { grid, components, values, spectrum: OnceLock::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let p = self.grid.points();
        &self.values[c * p..(c + 1) * p]
    }

    /// Normalized Fourier coefficients, computed once and then shared.
    pub fn spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| {
            let points = self.grid.points();
            let fft = NdFft::for_shape(self.grid.shape());
            let scale = 1.0 / points as f64;
            let mut out = Vec::with_capacity(self.values.len());
            for chunk in self.values.chunks(points) {
                let mut buf: Vec<C64> = chunk.iter().map(|&v| C64::new(v, 0.0)).collect();
                fft.forward(&mut buf);
                out.extend(buf.into_iter().map(|c| c * scale));
            }
            out
        })
    }

    pub fn component_spectrum(&self, c: usize) -> &[C64] {
        let p = self.grid.points();
        &self.spectrum()[c * p..(c + 1) * p]
    }

    /// Applies a per-mode transformation to the coefficients of every
    /// component: `g(flat, component, coefficient)`.
    pub fn map_spectrum(&self, mut g: impl FnMut(usize, usize, C64) -> C64) -> GridField {
        let points = self.grid.points();
        let coeffs: Vec<C64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| g(i % points, i / points, c))
            .collect();
        GridField::from_spectrum(self.grid.clone(), self.components, coeffs)
            .expect("shape preserved by construction")
    }

    /// Real radial Fourier multiplier `m(|k|)`.
    pub fn apply_radial(&self, m: impl Fn(f64) -> f64) -> GridField {
        let radii: Vec<f64> = (0..self.grid.points()).map(|f| self.grid.mode_radius(f)).collect();
        self.map_spectrum(|f, _, c| c * m(radii[f]))
    }

    /// Spectral partial derivative along `axis` (Nyquist mode dropped).
    pub fn derivative(&self, axis: usize) -> GridField {
        let grid = self.grid.clone();
        self.map_spectrum(|f, _, c| c * C64::new(0.0, grid.odd_mode(f)[axis]))
    }

    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.component(c);
        comp.iter().sum::<f64>() / comp.len() as f64
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        let points = self.grid.points();
        (0..points)
            .map(|p| {
                (0..self.components)
                    .map(|c| self.values[c * points + p].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `L^p` norm of the pointwise magnitude; `L^1` and `L^2` are periodic
    /// trapezoidal sums, `L^inf` is the grid maximum.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        let mag = self.magnitude();
        let dv = self.grid.cell_volume();
        match p {
            Exponent::One => dv * mag.iter().sum::<f64>(),
            Exponent::Two => (dv * mag.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            Exponent::Inf => mag.iter().fold(0.0, |a: f64, &b| a.max(b)),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(Exponent::Two)
    }

    /// `L^2` norm computed from the coefficients (Parseval).
    pub fn spectral_l2_norm(&self) -> f64 {
        (self.grid.volume() * self.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &b| a.max(b.abs()))
    }

    /// Extracts selected components into a new field.
    pub fn select(&self, comps: &[usize]) -> GridField {
        let mut values = Vec::with_capacity(comps.len() * self.grid.points());
        for &c in comps {
            values.extend_from_slice(self.component(c));
        }
        GridField::new(self.grid.clone(), comps.len(), values).expect("selected components")
    }

    pub fn scaled(&self, a: f64) -> GridField {
        GridField::new(self.grid.clone(), self.components, self.values.iter().map(|v| a * v).collect())
            .expect("same shape")
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        GridField::new(self.grid.clone(), self.components, values)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridField::new(self.grid.clone(), self.components, values)
    }

    pub fn check_compatible(&self, other: &GridField) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return input("fields live on different grids or have different component counts");
        }
        Ok(())
    }

    /// Circular shift by whole grid cells along each axis.
    pub fn translated(&self, shift: &[usize]) -> GridField {
        let points = self.grid.points();
        let mut values = vec![0.0; self.values.len()];
        for p in 0..points {
            let idx = self.grid.unravel(p);
            let mut moved = [0usize; 3];
            for a in 0..self.grid.dim() {
                moved[a] = (idx[a] + shift.get(a).copied().unwrap_or(0)) % self.grid.shape()[a];
            }
            let q = self.grid.ravel(&moved[..self.grid.dim()]);
            for c in 0..self.components {
                values[c * points + q] = self.values[c * points + p];
            }
        }
        GridField::new(self.grid.clone(), self.components, values).expect("same shape")
    }

    /// The dyadic dilation `f(2 .)`: identical samples on the halved box.
    pub fn dilated(&self) -> GridField {
        GridField {
            grid: self.grid.halved(),
            components: self.components,
            values: self.values.clone(),
            spectrum: self.spectrum.clone(),
        }
    }

    const MAGIC: &'static [u8; 4] = b"GFLD";

    /// Flat little-endian binary format: magic, `n`, resolutions, box
    /// lengths, `N`, then the component-major row-major values.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        for &m in self.grid.shape() {
            w.write_all(&(m as u64).to_le_bytes())?;
        }
        for &l in self.grid.lengths() {
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&(self.components as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Parse("not a grid-field file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        if n == 0 || n > 3 {
            return Err(Error::Parse(format!("invalid dimension {n}")));
        }
        let mut shape = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            shape.push(u64::from_le_bytes(b8) as usize);
        }
        let mut lengths = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            lengths.push(f64::from_le_bytes(b8));
        }
        r.read_exact(&mut b4)?;
        let components = u32::from_le_bytes(b4) as usize;
        let grid = Grid::new(shape, lengths)?;
        let count = components * grid.points();
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        GridField::new(grid, components, values)
    }

    /// CSV of a 1D slice along axis 0 at the origin of the other axes:
    /// `x,c0,c1,...`.
    pub fn write_csv_slice(&self, mut w: impl Write) -> Result<()> {
        let header: Vec<String> = (0..self.components).map(|c| format!("c{c}")).collect();
        writeln!(w, "x,{}", header.join(","))?;
        let stride: usize = self.grid.shape()[1..].iter().product();
        let points = self.grid.points();
        for i in 0..self.grid.shape()[0] {
            let p = i * stride;
            let mut row = vec![crate::harness::fmt_num(i as f64 * self.grid.spacing(0))];
            for c in 0..self.components {
                row.push(crate::harness::fmt_num(self.values[c * points + p]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_field(grid: Grid, comps: usize, seed: u64) -> GridField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..comps * grid.points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridField::new(grid, comps, values).unwrap()
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid::new(vec![12], vec![1.0]).is_err());
        assert!(Grid::new(vec![16, 16], vec![1.0]).is_err());
    }

    #[test]
    fn spectrum_is_hermitian() {
        let g = Grid::new(vec![8, 16], vec![1.0, 2.0]).unwrap();
        let f = random_field(g.clone(), 2, 3);
        let s = f.component_spectrum(1);
        for p in 0..g.points() {
            let idx = g.unravel(p);
            let neg = [(8 - idx[0]) % 8, (16 - idx[1]) % 16];
            let q = g.ravel(&neg);
            assert!((s[p] - s[q].conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn sine_derivative() {
        let g = Grid::cube(1, 64, 2.0 * PI).unwrap();
        let f = GridField::from_fn(g, 1, |x, o| o[0] = (3.0 * x[0]).sin());
        let d = f.derivative(0);
        for (p, v) in d.values().iter().enumerate() {
            let x = p as f64 * 2.0 * PI / 64.0;
            assert!((v - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let g = Grid::new(vec![4, 8], vec![1.5, 3.0]).unwrap();
        let f = random_field(g, 3, 11);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = GridField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(f, back);
    }

    proptest! {
        #[test]
        fn parseval_holds(seed in 0u64..1000, n in 1usize..=3) {
            let res = [64, 16, 8][n - 1];
            let g = Grid::cube(n, res, 5.0).unwrap();
            let f = random_field(g, 2, seed);
            let a = f.l2_norm();
            let b = f.spectral_l2_norm();
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }

        #[test]
        fn spectral_roundtrip(seed in 0u64..1000) {
            let g = Grid::new(vec![16, 8], vec![2.0, 1.0]).unwrap();
            let f = random_field(g.clone(), 1, seed);
            let back = GridField::from_spectrum(g, 1, f.spectrum().to_vec()).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
