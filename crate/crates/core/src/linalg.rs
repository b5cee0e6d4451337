//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex<f64>>;
pub type C64 = Complex<f64>;

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest entrywise deviation from symmetry.
pub fn asymmetry(m: &RMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn sym_part(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn skew_part(m: &RMat) -> RMat {
    (m - m.transpose()) * 0.5
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and
/// eigenvectors permuted to match.
pub fn sym_eigen_sorted(m: &RMat) -> (DVector<f64>, RMat) {
    let eig = SymmetricEigen::new(sym_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn lambda_min(m: &RMat) -> f64 {
    sym_eigen_sorted(m).0[0]
}

pub fn spectral_norm(m: &RMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn complex_eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let schur = m
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Sort eigenvalues by descending real part, then ascending imaginary part.
pub fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// Matrix exponential (Pade approximant with scaling and squaring).
pub fn expm(m: &CMat) -> Result<CMat> {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in exponent".into()));
    }
    let e = m.exp();
    if e.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(e)
}

/// Returns `(exp(Z), phi1(Z))` with `phi1(Z) = Z^{-1}(exp(Z) - I)`, both
/// read off the exponential of the augmented block matrix `[[Z, I], [0, 0]]`.
pub fn expm_with_phi1(z: &CMat) -> Result<(CMat, CMat)> {
    let n = z.nrows();
    let mut aug = CMat::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(z);
    for i in 0..n {
        aug[(i, n + i)] = C64::new(1.0, 0.0);
    }
    let e = expm(&aug)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    ))
}

/// Scalar `phi1(z) = (e^z - 1)/z`, using a Taylor series near the origin.
pub fn phi1_scalar(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..=8 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - C64::new(1.0, 0.0)) / z
    }
}

/// Hermitian form `(M v, v) = v^* M v` for a complex vector.
pub fn hermitian_form(m: &CMat, v: &DVector<C64>) -> C64 {
    let mv = m * v;
    v.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn cnorm2(v: &DVector<C64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi1_series_matches_closed_form_near_threshold() {
        for &z in &[C64::new(9e-4, 0.0), C64::new(-2e-3, 1e-3), C64::new(0.0, 1.1e-3)] {
            let direct = (z.exp() - C64::new(1.0, 0.0)) / z;
            assert!((phi1_scalar(z) - direct).norm() < 1e-12);
        }
        assert_eq!(phi1_scalar(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn augmented_phi1_agrees_with_scalar_on_diagonal() {
        let z = CMat::from_diagonal(&DVector::from_vec(vec![
            C64::new(-1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-0.3, 2.0),
        ]));
        let (e, p) = expm_with_phi1(&z).unwrap();
        for i in 0..3 {
            assert!((e[(i, i)] - z[(i, i)].exp()).norm() < 1e-13);
            assert!((p[(i, i)] - phi1_scalar(z[(i, i)])).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_matches_taylor_series() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                C64::new(0.1, 0.2),
                C64::new(-0.3, 0.0),
                C64::new(0.0, 0.4),
                C64::new(0.5, 0.0),
                C64::new(-0.2, -0.1),
                C64::new(0.1, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.3, 0.3),
                C64::new(-0.6, 0.0),
            ],
        );
        let mut term = CMat::identity(3, 3);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &m / C64::new(k as f64, 0.0);
            sum += &term;
        }
        assert!((expm(&m).unwrap() - sum).norm() < 1e-13);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 1.0), C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(-2.0, 0.5)],
        );
        let mut ev = complex_eigenvalues(&m).unwrap();
        sort_spectrum(&mut ev);
        assert!((ev[0] - C64::new(1.0, 1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(-2.0, 0.5)).norm() < 1e-14);
    }
}
