use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a matrix is symmetric.
const SYM_TOL: f64 = 1e-10;

pub fn check_square(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Argument(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    check_square(a, what)?;
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYM_TOL * scale {
                return Err(Error::Argument(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].abs();
    }
    sym_eigenvalues(a)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Checks positive semi-definiteness up to a relative tolerance.
pub fn check_psd(a: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    check_symmetric(a, what)?;
    let ev = sym_eigenvalues(a);
    let scale = ev
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if ev[0] < -1e-12 * scale {
        return Err(Error::Argument(format!(
            "{what} is not positive semi-definite (smallest eigenvalue {})",
            ev[0]
        )));
    }
    Ok(ev)
}

pub fn check_pd(a: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    check_symmetric(a, what)?;
    let ev = sym_eigenvalues(a);
    if ev[0] <= 0.0 {
        return Err(Error::Argument(format!(
            "{what} is not positive definite (smallest eigenvalue {})",
            ev[0]
        )));
    }
    Ok(ev)
}

/// `ln det(A)` of a positive definite matrix via Cholesky.
pub fn log_det_pd(a: &DMatrix<f64>) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Argument("matrix is not positive definite".into()))?;
    let l = chol.l();
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// `x^T A x`.
pub fn quad_form(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[(i, j)] * x[j];
        }
        s += x[i] * row;
    }
    s
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
