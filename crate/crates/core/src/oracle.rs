//! Explicit finite-ring assembly: the whole closed loop as one dense system,
//! solved directly. This is the reference path the per-frequency machinery
//! is checked against; everything here favours transparency over speed and
//! is capped at small rings.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lyapunov::{solve_ale, AleProblem, AleSide, AleSolution};
use crate::model::NetworkSpec;
use crate::spectral::{circle_points, LoopBlocks};
use crate::tol;

/// Dense description of an `n`-cell closed ring.
#[derive(Clone, Debug)]
pub struct FiniteNetwork {
    /// Cell count.
    pub n: usize,
    /// Per-cell state dimension.
    pub node_dim: usize,
    /// Full drift, `n * node_dim` square.
    pub a: DMatrix<f64>,
    /// Full field gain: one copy of the stacked per-cell gain per cell.
    pub b: DMatrix<f64>,
    /// Full quantum Ito intensity.
    pub omega: DMatrix<Complex64>,
    /// Block-Toeplitz weight matrix of the performance functional.
    pub weight: DMatrix<f64>,
    /// Per-cell output comparison matrix.
    pub node_output: DMatrix<f64>,
}

/// Assembles the dense drift, gain, and weight matrices of an `n`-cell ring.
///
/// Requires `n` to exceed twice every interaction range, so each block of
/// the circulant drift is claimed by exactly one offset, and caps the state
/// dimension to keep the dense solve affordable.
pub fn build_finite(spec: &NetworkSpec, n: usize) -> Result<FiniteNetwork> {
    let dims = spec.dims();
    let min = 2 * dims.max_range();
    if n <= min {
        return Err(Error::RingTooSmall { n, min });
    }
    let node_dim = dims.loop_vars();
    let full = n * node_dim;
    if full > tol::ORACLE_DIM_CAP {
        return Err(Error::OracleTooLarge {
            dim: full,
            cap: tol::ORACLE_DIM_CAP,
        });
    }

    let blocks = LoopBlocks::from_spec(spec)?;
    let np = dims.plant_vars();
    let nc = dims.ctrl_vars();

    let mut a = DMatrix::<f64>::zeros(full, full);
    let fams = blocks.families();
    for j in 0..n {
        // Plant row: both plant-plant hopping and the coupling into the
        // controller layer read cell j - l.
        for (l, block) in fams.plant.iter() {
            let k = (j as i64 - l).rem_euclid(n as i64) as usize;
            let mut view = a.view_mut((j * node_dim, k * node_dim), (np, np));
            view += block;
        }
        for (l, block) in fams.onto_plant.iter() {
            let k = (j as i64 - l).rem_euclid(n as i64) as usize;
            let mut view = a.view_mut((j * node_dim, k * node_dim + np), (np, nc));
            view += block;
        }
        // Controller row: the coupling reads the plant at cell j + l, the
        // opposite ring orientation.
        for (l, block) in fams.onto_ctrl.iter() {
            let k = (j as i64 + l).rem_euclid(n as i64) as usize;
            let mut view = a.view_mut((j * node_dim + np, k * node_dim), (nc, np));
            view += block;
        }
        for (l, block) in fams.ctrl.iter() {
            let k = (j as i64 - l).rem_euclid(n as i64) as usize;
            let mut view = a.view_mut((j * node_dim + np, k * node_dim + np), (nc, nc));
            view += block;
        }
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let b = eye.kronecker(blocks.gain());
    let omega = eye.map(|x| Complex64::new(x, 0.0)).kronecker(blocks.ito());

    let weights = spec.weights();
    let worder = weights.order();
    let mut weight = DMatrix::<f64>::zeros(n * worder, n * worder);
    for j in 0..n {
        for k in 0..n {
            let sep = (j as i64 - k as i64).unsigned_abs() as usize;
            if sep > weights.lag() {
                continue;
            }
            let block = if j >= k {
                weights.sigma(sep).clone()
            } else {
                weights.sigma(sep).transpose()
            };
            weight
                .view_mut((j * worder, k * worder), (worder, worder))
                .copy_from(&block);
        }
    }

    Ok(FiniteNetwork {
        n,
        node_dim,
        a,
        b,
        omega,
        weight,
        node_output: blocks.output().clone(),
    })
}

/// Steady covariance of the whole ring: solves the dense moment equation
/// with the ring's noise intensity as forcing.
pub fn finite_covariance(net: &FiniteNetwork) -> Result<AleSolution> {
    let a = linalg::to_complex(&net.a);
    let b = linalg::to_complex(&net.b);
    let v = &b * &net.omega * b.transpose();
    solve_ale(&AleProblem {
        a,
        v,
        side: AleSide::Controllability,
    })
}

/// Cost per cell from an already computed ring covariance.
pub fn cost_from_covariance(net: &FiniteNetwork, covariance: &DMatrix<Complex64>) -> f64 {
    let eye = DMatrix::<f64>::identity(net.n, net.n);
    let output = eye.kronecker(&net.node_output);
    let weighted = output.transpose() * &net.weight * output;
    let m = linalg::to_complex(&weighted);
    (m * covariance).trace().re / net.n as f64
}

/// Cost per cell of the dense ring, computed end to end without any
/// per-frequency machinery.
pub fn finite_cost_direct(net: &FiniteNetwork) -> Result<f64> {
    let cov = finite_covariance(net)?;
    Ok(cost_from_covariance(net, &cov.x))
}

/// Cross-frequency block `R_z S R_v^*` of a ring covariance, where `R_w` is
/// the row of falling powers of `w` over cells. For the steady covariance of
/// a translation-invariant ring these blocks vanish unless `z = v`, and the
/// diagonal block is `n` times the per-frequency covariance density.
pub fn dft_cross_block(
    covariance: &DMatrix<Complex64>,
    n: usize,
    node_dim: usize,
    zi: usize,
    vi: usize,
) -> DMatrix<Complex64> {
    let points = circle_points(n);
    let z = points[zi % n];
    let v = points[vi % n];
    let mut acc = DMatrix::<Complex64>::zeros(node_dim, node_dim);
    let mut zp = Complex64::new(1.0, 0.0);
    for j in 0..n {
        let mut vp = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let w = zp * vp.conj();
            let block = covariance.view((j * node_dim, k * node_dim), (node_dim, node_dim));
            acc += block.map(|x| w * x);
            vp *= v.conj();
        }
        zp *= z.conj();
    }
    acc
}

/// Largest commutation defect between the ring drift and the cyclic shift,
/// relative to the drift norm. Zero for a correctly assembled ring.
pub fn shift_commutation_defect(net: &FiniteNetwork) -> f64 {
    let n = net.n;
    let d = net.node_dim;
    let mut shift = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        shift[((k + 1) % n, k)] = 1.0;
    }
    let pi = shift.kronecker(&DMatrix::<f64>::identity(d, d));
    let defect = (&net.a * &pi - &pi * &net.a).norm();
    defect / net.a.norm().max(f64::MIN_POSITIVE)
}
