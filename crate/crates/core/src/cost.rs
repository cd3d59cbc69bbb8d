//! The quadratic performance functional, its finite-ring and thermodynamic
//! forms, and its exact gradients in the tunable controller parameters.
//!
//! Everything reduces to means of per-frequency quantities over circle
//! grids: the finite-ring cost is an exact mean over roots of unity against
//! triangularly damped weights, and the thermodynamic cost is the limit
//! mean over the whole circle, evaluated by adaptive grid doubling. The
//! gradient formulas hold for a purely local plant-controller coupling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lyapunov::{AleFactor, AleSide};
use crate::model::NetworkSpec;
use crate::spectral::{circle_points, LoopBlocks};
use crate::stability::{stability_sweep, SweepSettings, Verdict};
use crate::tol;

/// All per-frequency objects of the closed loop at one circle point.
#[derive(Clone, Debug)]
pub struct SpectralSample {
    pub z: Complex64,
    /// Drift symbol.
    pub symbol: DMatrix<Complex64>,
    /// Steady covariance density: solves `A S + S A^* + V = 0`.
    pub density: DMatrix<Complex64>,
    /// Adjoint weight density: solves `A^* Q + Q A + E^T Sigma E = 0`.
    pub dual: DMatrix<Complex64>,
    /// Product `dual * density`; its blocks drive every gradient formula.
    pub hankel: DMatrix<Complex64>,
    /// Weight spectral density at `z`.
    pub weight: DMatrix<Complex64>,
    pub density_residual: f64,
    pub dual_residual: f64,
}

/// Per-frequency sample from prepared loop blocks.
pub fn sample_at(blocks: &LoopBlocks, z: Complex64) -> Result<SpectralSample> {
    let symbol = blocks.symbol(z)?;
    let factor = AleFactor::new(&symbol).map_err(promote_not_hurwitz)?;
    let density = factor.solve(blocks.noise_intensity(), AleSide::Controllability)?;
    let weight = blocks.weights().symbol(z);
    let e = blocks.output_c();
    let forcing = e.transpose() * &weight * e;
    let dual = factor.solve(&forcing, AleSide::Observability)?;
    let hankel = &dual.x * &density.x;
    Ok(SpectralSample {
        z,
        symbol,
        hankel,
        weight,
        density_residual: density.residual,
        dual_residual: dual.residual,
        density: density.x,
        dual: dual.x,
    })
}

/// Per-frequency sample of a network description at `z`.
pub fn spectral_sample(spec: &NetworkSpec, z: Complex64) -> Result<SpectralSample> {
    sample_at(&LoopBlocks::from_spec(spec)?, z)
}

/// A drift that fails to be Hurwitz at some circle point means the loop is
/// not stabilizing; report it in those terms at this level.
fn promote_not_hurwitz(e: Error) -> Error {
    match e {
        Error::NotHurwitz { max_real } => Error::NotStabilizing { margin: max_real },
        other => other,
    }
}

/// Which weight density multiplies the output covariance.
#[derive(Clone, Copy, Debug)]
enum WeightKind {
    /// Full spectral density; thermodynamic limit.
    Full,
    /// Triangularly damped density of an `n`-cell ring.
    Cesaro(usize),
}

fn weight_at(blocks: &LoopBlocks, kind: WeightKind, z: Complex64) -> DMatrix<Complex64> {
    match kind {
        WeightKind::Full => blocks.weights().symbol(z),
        WeightKind::Cesaro(n) => blocks.weights().cesaro(n, z),
    }
}

/// Cost integrand at one point: pairing of the weight density with the
/// output covariance. Real up to roundoff; the imaginary part is returned
/// for bookkeeping.
fn value_term(blocks: &LoopBlocks, kind: WeightKind, z: Complex64) -> Result<(f64, f64)> {
    let symbol = blocks.symbol(z)?;
    let factor = AleFactor::new(&symbol).map_err(promote_not_hurwitz)?;
    let density = factor.solve(blocks.noise_intensity(), AleSide::Controllability)?;
    let e = blocks.output_c();
    let out_cov = e * &density.x * e.transpose();
    let t = (weight_at(blocks, kind, z) * out_cov).trace();
    Ok((t.re, t.im.abs()))
}

/// Integrand over a whole point set, in point order.
fn value_terms(
    blocks: &LoopBlocks,
    points: &[Complex64],
    kind: WeightKind,
) -> Result<(Vec<f64>, f64)> {
    let raw: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|&z| value_term(blocks, kind, z))
        .collect();
    let mut terms = Vec::with_capacity(raw.len());
    let mut im_abs = 0.0_f64;
    for r in raw {
        let (re, im) = r?;
        terms.push(re);
        im_abs = im_abs.max(im);
    }
    Ok((terms, im_abs))
}

/// Mean in index order; summation order is fixed so results do not depend
/// on thread count.
fn mean(terms: &[f64]) -> f64 {
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// The kind of averaging a report's value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// Exact cost per cell of an `n`-cell ring.
    FiniteRing { n: usize },
    /// Thermodynamic limit cost per cell.
    Thermodynamic,
}

/// Stationarity diagnostics: Frobenius norms of the averaged first-order
/// conditions, one per tunable block.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityResiduals {
    /// Controller energy conditions for offsets `0..=d2`.
    pub energy: Vec<f64>,
    /// Coupling condition.
    pub coupling: f64,
}

impl OptimalityResiduals {
    pub fn max(&self) -> f64 {
        self.energy
            .iter()
            .copied()
            .fold(self.coupling, f64::max)
    }
}

/// Cost value with optional gradient payloads.
#[derive(Clone, Debug)]
pub struct CostReport {
    pub kind: CostKind,
    pub value: f64,
    /// Points in the final averaging grid.
    pub grid: usize,
    /// Largest imaginary part seen in any integrand sample.
    pub imag_residue: f64,
    /// Gradient in the controller energy blocks `R0..Rd2`, when computed.
    pub grad_r2: Option<Vec<DMatrix<f64>>>,
    /// Gradient in the coupling block, when computed.
    pub grad_rt0: Option<DMatrix<f64>>,
    pub residuals: Option<OptimalityResiduals>,
    /// Skew part discarded when symmetrizing the lag-zero energy gradient.
    pub grad_symmetry_defect: f64,
}

/// Exact cost per cell of an `n`-cell ring, evaluated over the roots of
/// unity against triangularly damped weights.
pub fn finite_cost(spec: &NetworkSpec, n: usize) -> Result<CostReport> {
    let (report, _) = finite_spectrum(spec, n)?;
    Ok(report)
}

/// Finite-ring cost along with its per-point integrand samples.
pub fn finite_spectrum(
    spec: &NetworkSpec,
    n: usize,
) -> Result<(CostReport, Vec<(Complex64, f64)>)> {
    let min = 2 * spec.dims().max_range();
    if n <= min {
        return Err(Error::RingTooSmall { n, min });
    }
    let blocks = LoopBlocks::from_spec(spec)?;
    let points = circle_points(n);
    let (terms, im_abs) = value_terms(&blocks, &points, WeightKind::Cesaro(n))?;
    let report = CostReport {
        kind: CostKind::FiniteRing { n },
        value: mean(&terms),
        grid: n,
        imag_residue: im_abs,
        grad_r2: None,
        grad_rt0: None,
        residuals: None,
        grad_symmetry_defect: 0.0,
    };
    Ok((report, points.into_iter().zip(terms).collect()))
}

fn require_stabilizing(spec: &NetworkSpec) -> Result<()> {
    let report = stability_sweep(spec, &SweepSettings::default())?;
    match report.verdict {
        Verdict::Stabilizing => Ok(()),
        Verdict::NotStabilizing => Err(Error::NotStabilizing {
            margin: report.margin,
        }),
        Verdict::Inconclusive => Err(Error::Inconclusive {
            margin: report.margin,
            grid: report.grid,
        }),
    }
}

fn check_quad(start: usize) -> Result<usize> {
    if start < 2 {
        return Err(Error::Config(format!(
            "quadrature needs at least 2 starting points, got {start}"
        )));
    }
    Ok(tol::QUAD_MAX.max(2 * start))
}

/// Thermodynamic limit cost per cell.
pub fn thermo_cost(spec: &NetworkSpec, quad_points: usize) -> Result<CostReport> {
    require_stabilizing(spec)?;
    let blocks = LoopBlocks::from_spec(spec)?;
    let (report, _) = thermo_value_unchecked(&blocks, quad_points)?;
    Ok(report)
}

/// Thermodynamic integrand mean over exactly `grid_points` uniform circle
/// points, with no adaptive refinement. Useful for grid studies; the
/// adaptive [`thermo_cost`] is the right default.
pub fn thermo_cost_at(spec: &NetworkSpec, grid_points: usize) -> Result<CostReport> {
    if grid_points == 0 {
        return Err(Error::Config("grid must have at least one point".into()));
    }
    require_stabilizing(spec)?;
    let blocks = LoopBlocks::from_spec(spec)?;
    let points = circle_points(grid_points);
    let (terms, im_abs) = value_terms(&blocks, &points, WeightKind::Full)?;
    Ok(CostReport {
        kind: CostKind::Thermodynamic,
        value: mean(&terms),
        grid: grid_points,
        imag_residue: im_abs,
        grad_r2: None,
        grad_rt0: None,
        residuals: None,
        grad_symmetry_defect: 0.0,
    })
}

/// Thermodynamic cost along with integrand samples at the final grid.
pub fn thermo_spectrum(
    spec: &NetworkSpec,
    quad_points: usize,
) -> Result<(CostReport, Vec<(Complex64, f64)>)> {
    require_stabilizing(spec)?;
    let blocks = LoopBlocks::from_spec(spec)?;
    thermo_value_unchecked(&blocks, quad_points)
}

/// Adaptive mean of the cost integrand; the stability gate is the caller's
/// responsibility. Accepts the doubled grid once the value moves by less
/// than the relative quadrature tolerance.
pub(crate) fn thermo_value_unchecked(
    blocks: &LoopBlocks,
    quad_points: usize,
) -> Result<(CostReport, Vec<(Complex64, f64)>)> {
    let cap = check_quad(quad_points)?;
    let mut p = quad_points;
    let mut points = circle_points(p);
    let (mut terms, mut im_abs) = value_terms(blocks, &points, WeightKind::Full)?;
    let mut value = mean(&terms);
    // The cap is at least twice the starting grid, so the first doubling is
    // always admissible.
    loop {
        p *= 2;
        points = circle_points(p);
        let (next_terms, next_im) = value_terms(blocks, &points, WeightKind::Full)?;
        let next_value = mean(&next_terms);
        let change = (next_value - value).abs();
        let done = change <= tol::QUAD_REL * next_value.abs();
        terms = next_terms;
        im_abs = im_abs.max(next_im);
        value = next_value;
        if done {
            break;
        }
        if 2 * p > cap {
            return Err(Error::NoConvergence {
                max_points: cap,
                last_change: change,
            });
        }
    }
    let report = CostReport {
        kind: CostKind::Thermodynamic,
        value,
        grid: p,
        imag_residue: im_abs,
        grad_r2: None,
        grad_rt0: None,
        residuals: None,
        grad_symmetry_defect: 0.0,
    };
    Ok((report, points.into_iter().zip(terms).collect()))
}

/// Per-point contributions to the gradient and stationarity means.
struct GradTerm {
    value: f64,
    im_abs: f64,
    g0: DMatrix<f64>,
    gl: Vec<DMatrix<f64>>,
    gt: DMatrix<f64>,
    r41: Vec<DMatrix<f64>>,
    r42: DMatrix<f64>,
}

fn grad_term(blocks: &LoopBlocks, z: Complex64) -> Result<GradTerm> {
    let dims = blocks.dims();
    let np = dims.plant_vars();
    let nc = dims.ctrl_vars();
    let d2 = dims.d2;

    let sample = sample_at(blocks, z).map_err(promote_not_hurwitz)?;
    let e = blocks.output_c();
    let th1 = blocks.theta1_c();
    let th2 = blocks.theta2_c();

    let out_cov = e * &sample.density * e.transpose();
    let t = (&sample.weight * out_cov).trace();

    let h22 = sample.hankel.view((np, np), (nc, nc)).clone_owned();
    let h21 = sample.hankel.view((np, 0), (nc, np)).clone_owned();
    let h12 = sample.hankel.view((0, np), (np, nc)).clone_owned();

    // Gradient pieces.
    let m22 = h22.adjoint() * th2 - th2 * &h22;
    let g0 = linalg::re(&m22).scale(2.0);
    let mut gl = Vec::with_capacity(d2);
    for l in 1..=d2 {
        let w = z.powi(l as i32);
        gl.push(linalg::re(&m22.map(|x| w * x)).scale(4.0));
    }
    let cross = h21.adjoint() * th2 - th1 * &h12;
    let ses = &sample.weight * (e * &sample.density);
    let ses_block = ses.view((np, np), (np, nc)).clone_owned();
    let gt = linalg::re(&(&cross + ses_block.scale(0.5))).scale(4.0);

    // Stationarity conditions, accumulated from their own expressions so the
    // later comparison against the gradients is a genuine check.
    let mut r41 = Vec::with_capacity(d2 + 1);
    for l in 0..=d2 {
        let w = z.powi(l as i32);
        let lhs = linalg::re(&(th2 * &h22).map(|x| w * x))
            - linalg::re(&(h22.adjoint() * th2).map(|x| w * x));
        r41.push(lhs);
    }
    let r42 = linalg::re(&(h21.adjoint() * th2)) - linalg::re(&(th1 * &h12))
        + linalg::re(&ses_block).scale(0.5);

    Ok(GradTerm {
        value: t.re,
        im_abs: t.im.abs(),
        g0,
        gl,
        gt,
        r41,
        r42,
    })
}

/// Aggregated means of one gradient pass.
pub(crate) struct GradAgg {
    pub(crate) grid: usize,
    pub(crate) value: f64,
    pub(crate) im_abs: f64,
    pub(crate) g0: DMatrix<f64>,
    pub(crate) gl: Vec<DMatrix<f64>>,
    pub(crate) gt: DMatrix<f64>,
    pub(crate) r41: Vec<f64>,
    pub(crate) r42: f64,
    pub(crate) sym_defect: f64,
}

impl GradAgg {
    /// Euclidean norm over all gradient blocks together.
    pub(crate) fn grad_norm(&self) -> f64 {
        let mut sq = self.g0.norm_squared() + self.gt.norm_squared();
        for g in &self.gl {
            sq += g.norm_squared();
        }
        sq.sqrt()
    }
}

fn grad_mean(blocks: &LoopBlocks, p: usize) -> Result<GradAgg> {
    let dims = blocks.dims();
    let np = dims.plant_vars();
    let nc = dims.ctrl_vars();
    let d2 = dims.d2;
    let points = circle_points(p);
    let raw: Vec<Result<GradTerm>> = points
        .par_iter()
        .map(|&z| grad_term(blocks, z))
        .collect();

    let mut value = 0.0_f64;
    let mut im_abs = 0.0_f64;
    let mut g0 = DMatrix::<f64>::zeros(nc, nc);
    let mut gl = vec![DMatrix::<f64>::zeros(nc, nc); d2];
    let mut gt = DMatrix::<f64>::zeros(np, nc);
    let mut r41 = vec![DMatrix::<f64>::zeros(nc, nc); d2 + 1];
    let mut r42 = DMatrix::<f64>::zeros(np, nc);
    for r in raw {
        let term = r?;
        value += term.value;
        im_abs = im_abs.max(term.im_abs);
        g0 += term.g0;
        for (acc, t) in gl.iter_mut().zip(&term.gl) {
            *acc += t;
        }
        gt += term.gt;
        for (acc, t) in r41.iter_mut().zip(&term.r41) {
            *acc += t;
        }
        r42 += term.r42;
    }
    let scale = 1.0 / p as f64;
    value *= scale;
    g0.scale_mut(scale);
    for g in &mut gl {
        g.scale_mut(scale);
    }
    gt.scale_mut(scale);
    for r in &mut r41 {
        r.scale_mut(scale);
    }
    r42.scale_mut(scale);

    // The lag-zero energy gradient is symmetric in exact arithmetic; keep
    // the symmetric part and record what was discarded.
    let sym = (&g0 + g0.transpose()).scale(0.5);
    let sym_defect = (&g0 - &sym).norm();
    Ok(GradAgg {
        grid: p,
        value,
        im_abs,
        g0: sym,
        gl,
        gt,
        r41: r41.iter().map(|m| m.norm()).collect(),
        r42: r42.norm(),
        sym_defect,
    })
}

fn grad_converged(prev: &GradAgg, next: &GradAgg) -> bool {
    let value_ok = (next.value - prev.value).abs() <= tol::QUAD_REL * next.value.abs();
    let block_ok = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        (b - a).norm() <= tol::QUAD_REL * (1.0 + b.norm())
    };
    let mut grads_ok = block_ok(&prev.g0, &next.g0) && block_ok(&prev.gt, &next.gt);
    for (a, b) in prev.gl.iter().zip(&next.gl) {
        grads_ok = grads_ok && block_ok(a, b);
    }
    value_ok && grads_ok
}

/// Adaptive gradient pass; the stability gate is the caller's
/// responsibility.
pub(crate) fn grad_pass_unchecked(blocks: &LoopBlocks, quad_points: usize) -> Result<GradAgg> {
    if blocks.dims().d_tilde != 0 {
        return Err(Error::UnsupportedCoupling {
            d_tilde: blocks.dims().d_tilde,
        });
    }
    let cap = check_quad(quad_points)?;
    let mut prev = grad_mean(blocks, quad_points)?;
    // The cap is at least twice the starting grid, so the first doubling is
    // always admissible.
    loop {
        let next = grad_mean(blocks, 2 * prev.grid)?;
        if grad_converged(&prev, &next) {
            return Ok(next);
        }
        let change = (next.value - prev.value).abs();
        if 2 * next.grid > cap {
            return Err(Error::NoConvergence {
                max_points: cap,
                last_change: change,
            });
        }
        prev = next;
    }
}

fn grad_report(agg: GradAgg) -> CostReport {
    let mut grads = Vec::with_capacity(agg.gl.len() + 1);
    grads.push(agg.g0.clone());
    grads.extend(agg.gl.iter().cloned());
    CostReport {
        kind: CostKind::Thermodynamic,
        value: agg.value,
        grid: agg.grid,
        imag_residue: agg.im_abs,
        grad_r2: Some(grads),
        grad_rt0: Some(agg.gt.clone()),
        residuals: Some(OptimalityResiduals {
            energy: agg.r41.clone(),
            coupling: agg.r42,
        }),
        grad_symmetry_defect: agg.sym_defect,
    }
}

/// Thermodynamic cost with gradients and stationarity residuals. Requires a
/// purely local plant-controller coupling.
pub fn thermo_cost_with_gradient(spec: &NetworkSpec, quad_points: usize) -> Result<CostReport> {
    if spec.dims().d_tilde != 0 {
        return Err(Error::UnsupportedCoupling {
            d_tilde: spec.dims().d_tilde,
        });
    }
    require_stabilizing(spec)?;
    let blocks = LoopBlocks::from_spec(spec)?;
    Ok(grad_report(grad_pass_unchecked(&blocks, quad_points)?))
}

/// Gradient of the thermodynamic cost in the controller energy blocks
/// `R0..Rd2`.
pub fn grad_energy(spec: &NetworkSpec, quad_points: usize) -> Result<Vec<DMatrix<f64>>> {
    thermo_cost_with_gradient(spec, quad_points).map(|r| r.grad_r2.expect("gradient requested"))
}

/// Gradient of the thermodynamic cost in the coupling block.
pub fn grad_coupling(spec: &NetworkSpec, quad_points: usize) -> Result<DMatrix<f64>> {
    thermo_cost_with_gradient(spec, quad_points).map(|r| r.grad_rt0.expect("gradient requested"))
}

/// Frobenius norms of the averaged first-order stationarity conditions.
pub fn optimality_residual(spec: &NetworkSpec, quad_points: usize) -> Result<OptimalityResiduals> {
    thermo_cost_with_gradient(spec, quad_points).map(|r| r.residuals.expect("residuals requested"))
}
