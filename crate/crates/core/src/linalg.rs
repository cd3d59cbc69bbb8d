//! Dense-matrix helpers shared by the solver modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest entry magnitude; zero for empty input.
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
pub(crate) fn max_abs_c(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Hermitian average `(m + m^*)/2` with the Frobenius norm of the discarded
/// skew part.
pub(crate) fn hermitize(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let herm = (m + m.adjoint()).scale(0.5);
    let defect = (m - &herm).norm();
    (herm, defect)
}

/// Complex Schur form `a = u t u^*` with `t` upper triangular.
pub(crate) fn schur(a: DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let s = a.try_schur(f64::EPSILON, 0).ok_or(Error::EigFailure)?;
    let (u, t) = s.unpack();
    Ok((u, t))
}

/// Largest eigenvalue real part.
pub(crate) fn spectral_abscissa(a: &DMatrix<Complex64>) -> Result<f64> {
    let s = a.clone().try_schur(f64::EPSILON, 0).ok_or(Error::EigFailure)?;
    let eig = s.eigenvalues().ok_or(Error::EigFailure)?;
    Ok(eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn hermitian_min_eig(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest and smallest singular values.
pub(crate) fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().copied().fold(0.0_f64, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (hi, if lo.is_finite() { lo } else { 0.0 })
}

pub(crate) fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub(crate) fn block_diag_c(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Real part, entrywise.
pub(crate) fn re(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|x| x.re)
}
