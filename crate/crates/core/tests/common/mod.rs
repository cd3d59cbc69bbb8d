//! Shared fixtures for the integration suites: seeded instance builders and
//! a dense Kronecker-sum reference solver for the moment equations.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tinet_core::model::{
    CcrMatrix, ControllerPoint, EnergyBlocks, NetworkSpec, NodeDims, WeightSequence,
};

/// Single-mode loop with every energy block zero and unit weights.
///
/// The closed loop decouples into two damped modes with drift `-2 I`, the
/// covariance density is constant in frequency, and the cost per cell is
/// exactly 2 in floating point, which makes this the anchor for frozen-value
/// checks across the finite, spectral, and direct evaluation routes.
pub fn degenerate_spec() -> NetworkSpec {
    let dims = NodeDims::new(1, 1, 1, 1, 1, 1, 0).unwrap();
    let zero2 = DMatrix::<f64>::zeros(2, 2);
    let plant = EnergyBlocks::new(zero2.clone(), vec![zero2.clone()]).unwrap();
    let ctrl = EnergyBlocks::new(zero2.clone(), vec![zero2.clone()]).unwrap();
    let controller = ControllerPoint::new(ctrl, zero2);
    let weights = WeightSequence::new(vec![DMatrix::<f64>::identity(4, 4)]).unwrap();
    NetworkSpec::new(
        dims,
        CcrMatrix::canonical(1),
        CcrMatrix::canonical(1),
        plant,
        DMatrix::<f64>::identity(2, 2),
        DMatrix::<f64>::identity(2, 2),
        weights,
        controller,
    )
    .unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Random single-mode instance from one seed.
///
/// All energy entries are drawn uniformly from `(-0.1, 0.1)`, so the drift
/// symbol is `-2 I` plus a perturbation of spectral norm well under 1 and
/// every draw is stabilizing with margin below -1. Weights are an identity
/// lag-zero block plus small lag-1 and lag-2 blocks whose diagonal bias
/// keeps the low-frequency weight content away from zero.
pub fn random_spec(seed: u64) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = NodeDims::new(1, 1, 1, 1, 1, 1, 0).unwrap();
    let plant = EnergyBlocks::new(
        random_matrix(&mut rng, 2, 2, 0.1),
        vec![random_matrix(&mut rng, 2, 2, 0.1)],
    )
    .unwrap();
    let ctrl = EnergyBlocks::new(
        random_matrix(&mut rng, 2, 2, 0.1),
        vec![random_matrix(&mut rng, 2, 2, 0.1)],
    )
    .unwrap();
    let rt0 = random_matrix(&mut rng, 2, 2, 0.1);
    let sigma0 = DMatrix::<f64>::identity(4, 4);
    let sigma1 = DMatrix::<f64>::identity(4, 4) * 0.05 + random_matrix(&mut rng, 4, 4, 0.02);
    let sigma2 = DMatrix::<f64>::identity(4, 4) * 0.02 + random_matrix(&mut rng, 4, 4, 0.01);
    let weights = WeightSequence::new(vec![sigma0, sigma1, sigma2]).unwrap();
    NetworkSpec::new(
        dims,
        CcrMatrix::canonical(1),
        CcrMatrix::canonical(1),
        plant,
        DMatrix::<f64>::identity(2, 2),
        DMatrix::<f64>::identity(2, 2),
        weights,
        ControllerPoint::new(ctrl, rt0),
    )
    .unwrap()
}

/// Seeds shared by the acceptance criteria that quantify over an instance set.
pub fn instance_seeds(count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| 7001 + 13 * k).collect()
}

/// Random complex matrix with entries uniform in the unit square.
pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random Hurwitz complex matrix: a bounded random part shifted left by
/// slightly more than its Frobenius norm.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let q = random_complex(rng, n);
    let shift = Complex64::new(q.norm() + 0.5, 0.0);
    q - DMatrix::<Complex64>::identity(n, n) * shift
}

/// Random Hermitian positive semidefinite matrix `G G^*`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let g = random_complex(rng, n);
    &g * g.adjoint()
}

/// Dense reference solve of `A X + X A^* + V = 0` by vectorization:
/// `(I (x) A + conj(A) (x) I) vec(X) = -vec(V)` in column-major stacking.
pub fn kron_controllability(a: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let m = eye.kronecker(a) + a.conjugate().kronecker(&eye);
    kron_solve(&m, v, n)
}

/// Dense reference solve of `A^* X + X A + V = 0` by vectorization:
/// `(I (x) A^* + A^T (x) I) vec(X) = -vec(V)`.
pub fn kron_observability(a: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let m = eye.kronecker(&a.adjoint()) + a.transpose().kronecker(&eye);
    kron_solve(&m, v, n)
}

fn kron_solve(m: &DMatrix<Complex64>, v: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    let rhs = DVector::from_column_slice(v.as_slice()) * Complex64::new(-1.0, 0.0);
    let sol = m
        .clone()
        .lu()
        .solve(&rhs)
        .expect("Kronecker-sum system must be nonsingular for a Hurwitz pencil");
    DMatrix::from_column_slice(n, n, sol.as_slice())
}

pub fn frob(m: &DMatrix<Complex64>) -> f64 {
    m.norm()
}

pub fn rel_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
