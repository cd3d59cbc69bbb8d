//! Dense solver for the per-frequency steady-state moment equations
//! `A X + X A^* + V = 0` and `A^* X + X A + V = 0`.
//!
//! One Schur factorization of the drift serves both equations: after
//! rotating into triangular coordinates each column of the unknown satisfies
//! a shifted triangular system, solved by direct substitution. The factored
//! form is cached per circle point so the pair of solves shares the
//! expensive step.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol;

/// Which side the drift adjoint enters on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AleSide {
    /// `A X + X A^* + V = 0`; steady covariance driven by `V`.
    Controllability,
    /// `A^* X + X A + V = 0`; adjoint weight accumulation.
    Observability,
}

/// One steady-state moment equation.
#[derive(Clone, Debug)]
pub struct AleProblem {
    pub a: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub side: AleSide,
}

/// Solution with its measured backward error.
#[derive(Clone, Debug)]
pub struct AleSolution {
    /// Hermitian part of the raw solve.
    pub x: DMatrix<Complex64>,
    /// Frobenius norm of the equation residual at `x`.
    pub residual: f64,
    /// Frobenius norm of the skew part discarded from the raw solve.
    pub hermitian_defect: f64,
}

/// Solves one moment equation from scratch.
pub fn solve_ale(problem: &AleProblem) -> Result<AleSolution> {
    if !problem.a.is_square() || !problem.v.is_square() || problem.a.nrows() != problem.v.nrows() {
        return Err(Error::Dimension(format!(
            "moment equation needs square matrices of one order, got {}x{} and {}x{}",
            problem.a.nrows(),
            problem.a.ncols(),
            problem.v.nrows(),
            problem.v.ncols()
        )));
    }
    AleFactor::new(&problem.a)?.solve(&problem.v, problem.side)
}

/// Schur factorization of one drift, reusable across right-hand sides and
/// both equation sides.
pub(crate) struct AleFactor {
    a: DMatrix<Complex64>,
    u: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

impl AleFactor {
    pub(crate) fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let (u, t) = linalg::schur(a.clone())?;
        let abscissa = t
            .diagonal()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if abscissa >= -tol::HURWITZ {
            return Err(Error::NotHurwitz { max_real: abscissa });
        }
        Ok(Self {
            a: a.clone(),
            u,
            t,
        })
    }

    pub(crate) fn solve(&self, v: &DMatrix<Complex64>, side: AleSide) -> Result<AleSolution> {
        let n = self.t.nrows();
        if v.nrows() != n || v.ncols() != n {
            return Err(Error::Dimension(format!(
                "forcing is {}x{}, expected {n}x{n}",
                v.nrows(),
                v.ncols()
            )));
        }
        let w = self.u.adjoint() * v * &self.u;
        let y = match side {
            AleSide::Controllability => triangular_controllability(&self.t, &w),
            AleSide::Observability => triangular_observability(&self.t, &w),
        };
        let raw = &self.u * y * self.u.adjoint();
        let (x, hermitian_defect) = linalg::hermitize(&raw);

        let residual = match side {
            AleSide::Controllability => (&self.a * &x + &x * self.a.adjoint() + v).norm(),
            AleSide::Observability => (self.a.adjoint() * &x + &x * &self.a + v).norm(),
        };
        let target = tol::ALE_RESIDUAL * (self.a.norm() * x.norm() + v.norm());
        if residual > target {
            return Err(Error::IllConditioned {
                achieved: residual,
                target,
            });
        }
        Ok(AleSolution {
            x,
            residual,
            hermitian_defect,
        })
    }
}

/// Solves `T Y + Y T^* = -W` for upper triangular `T`, columns right to
/// left: column `k` sees only already-known columns `j > k` and one shifted
/// upper-triangular system `(T + conj(t_kk) I) y_k = rhs`.
fn triangular_controllability(t: &DMatrix<Complex64>, w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in (0..n).rev() {
        let mut rhs = DVector::<Complex64>::zeros(n);
        for i in 0..n {
            rhs[i] = -w[(i, k)];
        }
        for j in (k + 1)..n {
            let c = t[(k, j)].conj();
            for i in 0..n {
                rhs[i] -= c * y[(i, j)];
            }
        }
        let shift = t[(k, k)].conj();
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in (i + 1)..n {
                s -= t[(i, j)] * y[(j, k)];
            }
            y[(i, k)] = s / (t[(i, i)] + shift);
        }
    }
    y
}

/// Solves `T^* Y + Y T = -W` for upper triangular `T`, columns left to
/// right: column `k` sees only columns `j < k` and one shifted
/// lower-triangular system `(T^* + t_kk I) y_k = rhs`.
fn triangular_observability(t: &DMatrix<Complex64>, w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let mut rhs = DVector::<Complex64>::zeros(n);
        for i in 0..n {
            rhs[i] = -w[(i, k)];
        }
        for j in 0..k {
            let c = t[(j, k)];
            for i in 0..n {
                rhs[i] -= c * y[(i, j)];
            }
        }
        let shift = t[(k, k)];
        for i in 0..n {
            let mut s = rhs[i];
            for j in 0..i {
                s -= t[(j, i)].conj() * y[(j, k)];
            }
            y[(i, k)] = s / (t[(i, i)].conj() + shift);
        }
    }
    y
}
