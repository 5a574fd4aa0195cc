//! Dense helpers for the theory constants: SPD checks, matrix square roots
//! and the greatest singular value.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::problems::Matrix;

/// Relative eigenvalue floor below which a symmetric matrix is treated as
/// not positive definite.
pub const SPD_REL_TOL: f64 = 1e-12;

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

fn check_square(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("{what} must be a non-empty square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    Ok(())
}

/// Eigendecomposition of a symmetric positive definite matrix.
///
/// `a` is symmetrized first; it is rejected when its smallest eigenvalue does
/// not exceed `SPD_REL_TOL` times its largest.
pub fn spd_eigen(a: &Matrix, what: &str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    check_square(a, what)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSpd(format!("{what} has non-finite entries")));
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || !(min > SPD_REL_TOL * max) {
        return Err(Error::NotSpd(format!("{what}: eigenvalues in [{min:e}, {max:e}]")));
    }
    Ok(eig)
}

pub fn is_spd(a: &Matrix) -> bool {
    spd_eigen(a, "matrix").is_ok()
}

fn spectral_map(a: &Matrix, what: &str, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let eig = spd_eigen(a, what)?;
    let mapped = eig.eigenvalues.map(f);
    let q = &eig.eigenvectors;
    Ok(symmetrize(&(q * Matrix::from_diagonal(&mapped) * q.transpose())))
}

/// Symmetric square root `B` of an SPD matrix, `B·B = A`.
pub fn spd_sqrt(a: &Matrix) -> Result<Matrix> {
    spectral_map(a, "spd_sqrt input", f64::sqrt)
}

/// `A^{-1/2}` of an SPD matrix.
pub fn spd_inv_sqrt(a: &Matrix) -> Result<Matrix> {
    spectral_map(a, "spd_inv_sqrt input", |l| 1.0 / l.sqrt())
}

/// `A^{-1} B` for SPD `A`, via Cholesky.
pub fn spd_solve(a: &Matrix, b: &Matrix, what: &str) -> Result<Matrix> {
    spd_eigen(a, what)?;
    let chol = symmetrize(a).cholesky().ok_or_else(|| Error::NotSpd(format!("{what}: Cholesky failed")))?;
    Ok(chol.solve(b))
}

/// `A^{-1} B` for a general square `A`, via LU.
pub fn solve(a: &Matrix, b: &Matrix, what: &str) -> Result<Matrix> {
    check_square(a, what)?;
    a.clone().lu().solve(b).ok_or_else(|| Error::Singular(what.to_string()))
}

/// Greatest singular value, from a full SVD.
pub fn greatest_singular_value(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}
