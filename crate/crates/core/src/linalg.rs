//! Matrix functions of symmetric matrices via eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GeometryError, Result};

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Frobenius norm of `A − Aᵀ` relative to `max(1, ‖A‖_F)`.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let skew = (a - a.transpose()).norm();
    skew / a.norm().max(1.0)
}

/// Applies `f` to the spectrum of the symmetric part of `a`.
///
/// `guard` sees every eigenvalue first and may reject it.
fn spectral_map(
    a: &DMatrix<f64>,
    guard: impl Fn(f64) -> Result<()>,
    f: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(GeometryError::Contract(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::Numerical("non-finite matrix entry".into()));
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    for &lam in eig.eigenvalues.iter() {
        guard(lam)?;
    }
    let mapped = eig.eigenvalues.map(f);
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&mapped) * q.transpose();
    Ok(symmetrize(&out))
}

fn positive(lam: f64) -> Result<()> {
    if lam > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::Domain(format!(
            "matrix is not positive definite (eigenvalue {lam:e})"
        )))
    }
}

/// Matrix exponential of a symmetric matrix.
pub fn sym_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_map(a, |_| Ok(()), f64::exp)
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_log(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_map(a, positive, f64::ln)
}

pub fn spd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_map(a, positive, f64::sqrt)
}

pub fn spd_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_map(a, positive, |x| 1.0 / x.sqrt())
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| GeometryError::Domain("matrix is not positive definite".into()))
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
