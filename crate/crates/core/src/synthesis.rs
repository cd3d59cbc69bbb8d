//! Controller synthesis by projected-free gradient descent, plus the
//! finite-difference check that protects the analytic gradients.
//!
//! The descent walks the tunable blocks downhill under an Armijo
//! backtracking rule, rejecting any trial point whose closed loop fails the
//! stability sweep. Costs recorded in the trace all come from the same
//! value-quadrature policy, so the trace is strictly decreasing whenever a
//! step is accepted.

use nalgebra::DMatrix;

use crate::cost::{grad_pass_unchecked, thermo_value_unchecked, GradAgg, OptimalityResiduals};
use crate::error::{Error, Result};
use crate::model::{ControllerPoint, EnergyBlocks, NetworkSpec};
use crate::spectral::LoopBlocks;
use crate::stability::{stability_sweep, SweepSettings, Verdict};
use crate::tol;

/// Descent policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentConfig {
    pub max_iters: usize,
    /// First trial step of every line search.
    pub init_step: f64,
    /// Multiplier applied to the step on each rejection; in `(0, 1)`.
    pub backtrack_factor: f64,
    /// Sufficient-decrease coefficient; in `(0, 1)`.
    pub armijo_c: f64,
    /// Relative stationarity threshold: the run converges once the gradient
    /// norm falls below `stationarity_tol * (1 + initial gradient norm)`.
    pub stationarity_tol: f64,
    /// Starting grid for every cost and gradient quadrature.
    pub quad_points: usize,
    /// Recorded in the trace for reproducibility bookkeeping; the descent
    /// itself is deterministic.
    pub seed: u64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            init_step: 1.0,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            stationarity_tol: tol::STATIONARITY_REL,
            quad_points: tol::QUAD_DEFAULT,
            seed: 0,
        }
    }
}

impl DescentConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.init_step.is_finite() && self.init_step > 0.0) {
            return Err(Error::Config("init_step must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Config("armijo_c must lie in (0, 1)".into()));
        }
        if !(self.stationarity_tol.is_finite() && self.stationarity_tol > 0.0) {
            return Err(Error::Config("stationarity_tol must be positive".into()));
        }
        if self.quad_points < 2 {
            return Err(Error::Config("quad_points must be at least 2".into()));
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Cost at the iterate, from the value-quadrature policy.
    pub cost: f64,
    /// Gradient norm over all tunable blocks at the iterate.
    pub grad_norm: f64,
    /// Accepted step length that produced this iterate; zero for the start.
    pub step: f64,
    /// Stability margin at the iterate.
    pub margin: f64,
}

/// Why the descent stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Gradient norm fell below the stationarity threshold.
    Converged,
    /// Iteration budget exhausted first.
    MaxIterations,
    /// No acceptable step before the backtracking underflow floor.
    Stalled,
}

/// Full history of one descent run.
#[derive(Clone, Debug)]
pub struct DescentTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub initial_grad_norm: f64,
    /// Absolute stationarity threshold derived from the initial gradient.
    pub threshold: f64,
    /// Stationarity residuals at the final iterate.
    pub final_residuals: OptimalityResiduals,
    pub seed: u64,
}

fn require_start_stabilizing(spec: &NetworkSpec) -> Result<f64> {
    let report = stability_sweep(spec, &SweepSettings::default())?;
    match report.verdict {
        Verdict::Stabilizing => Ok(report.margin),
        Verdict::NotStabilizing => Err(Error::NotStabilizing {
            margin: report.margin,
        }),
        Verdict::Inconclusive => Err(Error::Inconclusive {
            margin: report.margin,
            grid: report.grid,
        }),
    }
}

fn apply_step(ctrl: &ControllerPoint, agg: &GradAgg, alpha: f64) -> Result<ControllerPoint> {
    let r0 = ctrl.r2().r0() - agg.g0.scale(alpha);
    let rpos: Vec<DMatrix<f64>> = ctrl
        .r2()
        .positive()
        .iter()
        .zip(&agg.gl)
        .map(|(r, g)| r - g.scale(alpha))
        .collect();
    let rt0 = ctrl.rt0() - agg.gt.scale(alpha);
    Ok(ControllerPoint::new(EnergyBlocks::new(r0, rpos)?, rt0))
}

/// Gradient descent over the tunable controller blocks.
///
/// Starts from the controller in `spec`, which must be stabilizing. Returns
/// the final controller and the full trace; a stalled line search or an
/// exhausted iteration budget end the run normally with the reason recorded
/// in the trace.
pub fn descend(spec: &NetworkSpec, cfg: &DescentConfig) -> Result<(ControllerPoint, DescentTrace)> {
    cfg.validate()?;
    if spec.dims().d_tilde != 0 {
        return Err(Error::UnsupportedCoupling {
            d_tilde: spec.dims().d_tilde,
        });
    }
    let quick = SweepSettings::quick();
    let start_margin = require_start_stabilizing(spec)?;

    let mut cur = spec.clone();
    let mut blocks = LoopBlocks::from_spec(&cur)?;
    let mut agg = grad_pass_unchecked(&blocks, cfg.quad_points)?;
    let (value_report, _) = thermo_value_unchecked(&blocks, cfg.quad_points)?;
    let mut cost_cur = value_report.value;

    let initial_grad_norm = agg.grad_norm();
    let threshold = cfg.stationarity_tol * (1.0 + initial_grad_norm);

    let mut records = vec![IterationRecord {
        iteration: 0,
        cost: cost_cur,
        grad_norm: initial_grad_norm,
        step: 0.0,
        margin: start_margin,
    }];

    let mut termination = Termination::MaxIterations;
    for iteration in 1..=cfg.max_iters {
        if agg.grad_norm() <= threshold {
            termination = Termination::Converged;
            break;
        }
        let grad_sq = agg.grad_norm() * agg.grad_norm();

        let mut alpha = cfg.init_step;
        let mut accepted = None;
        while alpha >= tol::STEP_UNDERFLOW {
            let cand_ctrl = apply_step(cur.controller(), &agg, alpha)?;
            let cand_spec = cur.with_controller(cand_ctrl)?;
            let sweep = stability_sweep(&cand_spec, &quick)?;
            if sweep.is_stabilizing() {
                let cand_blocks = LoopBlocks::from_spec(&cand_spec)?;
                let (vrep, _) = thermo_value_unchecked(&cand_blocks, cfg.quad_points)?;
                if vrep.value <= cost_cur - cfg.armijo_c * alpha * grad_sq {
                    accepted = Some((cand_spec, cand_blocks, vrep.value, sweep.margin, alpha));
                    break;
                }
            }
            alpha *= cfg.backtrack_factor;
        }

        match accepted {
            None => {
                termination = Termination::Stalled;
                break;
            }
            Some((cand_spec, cand_blocks, cand_cost, cand_margin, step)) => {
                cur = cand_spec;
                blocks = cand_blocks;
                cost_cur = cand_cost;
                agg = grad_pass_unchecked(&blocks, cfg.quad_points)?;
                records.push(IterationRecord {
                    iteration,
                    cost: cost_cur,
                    grad_norm: agg.grad_norm(),
                    step,
                    margin: cand_margin,
                });
            }
        }
    }
    if termination == Termination::MaxIterations && agg.grad_norm() <= threshold {
        termination = Termination::Converged;
    }

    let trace = DescentTrace {
        records,
        termination,
        initial_grad_norm,
        threshold,
        final_residuals: OptimalityResiduals {
            energy: agg.r41.clone(),
            coupling: agg.r42,
        },
        seed: cfg.seed,
    };
    Ok((cur.controller().clone(), trace))
}

/// Outcome of the finite-difference comparison for one tunable block.
#[derive(Clone, Debug)]
pub struct BlockCheck {
    pub name: String,
    pub analytic_norm: f64,
    pub fd_norm: f64,
    /// `|fd - analytic| / |analytic|` in Frobenius norms, floored against
    /// division by vanishing gradients.
    pub rel_error: f64,
}

/// Report of one finite-difference gradient check.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub h: f64,
    pub blocks: Vec<BlockCheck>,
    pub max_rel_error: f64,
}

/// Compares the analytic gradients against central differences of the cost
/// with step `h`, entry by entry, using the default quadrature start.
pub fn grad_check(spec: &NetworkSpec, h: f64) -> Result<GradCheckReport> {
    grad_check_with(spec, h, tol::QUAD_DEFAULT)
}

/// Which tunable entry a probe perturbs.
#[derive(Clone, Copy)]
enum Probe {
    Energy { offset: usize },
    Coupling,
}

fn perturbed(spec: &NetworkSpec, probe: Probe, i: usize, j: usize, delta: f64) -> Result<NetworkSpec> {
    let ctrl = spec.controller();
    let ctrl = match probe {
        Probe::Energy { offset } => {
            let mut r0 = ctrl.r2().r0().clone();
            let mut rpos: Vec<DMatrix<f64>> = ctrl.r2().positive().to_vec();
            if offset == 0 {
                // The constructor re-symmetrizes, so the effective direction
                // for an off-diagonal entry is the symmetrized unit pair;
                // the central difference then estimates exactly one gradient
                // entry of the symmetric gradient block.
                r0[(i, j)] += delta;
            } else {
                rpos[offset - 1][(i, j)] += delta;
            }
            ControllerPoint::new(EnergyBlocks::new(r0, rpos)?, ctrl.rt0().clone())
        }
        Probe::Coupling => {
            let mut rt0 = ctrl.rt0().clone();
            rt0[(i, j)] += delta;
            ControllerPoint::new(ctrl.r2().clone(), rt0)
        }
    };
    spec.with_controller(ctrl)
}

/// Finite-difference gradient check with an explicit quadrature start.
pub fn grad_check_with(spec: &NetworkSpec, h: f64, quad_points: usize) -> Result<GradCheckReport> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    if spec.dims().d_tilde != 0 {
        return Err(Error::UnsupportedCoupling {
            d_tilde: spec.dims().d_tilde,
        });
    }
    require_start_stabilizing(spec)?;
    let blocks = LoopBlocks::from_spec(spec)?;
    let agg = grad_pass_unchecked(&blocks, quad_points)?;

    let quick = SweepSettings::quick();
    let eval = |s: &NetworkSpec| -> Result<f64> {
        let sweep = stability_sweep(s, &quick)?;
        if !sweep.is_stabilizing() {
            return Err(Error::StepLeavesStabilizingSet);
        }
        let b = LoopBlocks::from_spec(s)?;
        Ok(thermo_value_unchecked(&b, quad_points)?.0.value)
    };
    let central = |probe: Probe, i: usize, j: usize| -> Result<f64> {
        let plus = eval(&perturbed(spec, probe, i, j, h)?)?;
        let minus = eval(&perturbed(spec, probe, i, j, -h)?)?;
        Ok((plus - minus) / (2.0 * h))
    };

    let dims = spec.dims();
    let nc = dims.ctrl_vars();
    let np = dims.plant_vars();
    let floor = 1e-12 * (1.0 + agg.value.abs());

    let mut checks = Vec::new();
    let mut push_check = |name: String, analytic: &DMatrix<f64>, fd: DMatrix<f64>| {
        let analytic_norm = analytic.norm();
        let fd_norm = fd.norm();
        let diff = (fd - analytic).norm();
        let rel_error = if analytic_norm < floor && fd_norm < floor {
            0.0
        } else {
            diff / analytic_norm.max(floor)
        };
        checks.push(BlockCheck {
            name,
            analytic_norm,
            fd_norm,
            rel_error,
        });
    };

    // Lag-zero energy block: symmetric, so probe the upper triangle and
    // mirror.
    let mut fd0 = DMatrix::<f64>::zeros(nc, nc);
    for i in 0..nc {
        for j in i..nc {
            let d = central(Probe::Energy { offset: 0 }, i, j)?;
            fd0[(i, j)] = d;
            fd0[(j, i)] = d;
        }
    }
    push_check("R2[0]".into(), &agg.g0, fd0);

    for offset in 1..=dims.d2 {
        let mut fd = DMatrix::<f64>::zeros(nc, nc);
        for i in 0..nc {
            for j in 0..nc {
                fd[(i, j)] = central(Probe::Energy { offset }, i, j)?;
            }
        }
        push_check(format!("R2[{offset}]"), &agg.gl[offset - 1], fd);
    }

    let mut fdt = DMatrix::<f64>::zeros(np, nc);
    for i in 0..np {
        for j in 0..nc {
            fdt[(i, j)] = central(Probe::Coupling, i, j)?;
        }
    }
    push_check("Rt0".into(), &agg.gt, fdt);

    let max_rel_error = checks.iter().map(|c| c.rel_error).fold(0.0_f64, f64::max);
    Ok(GradCheckReport {
        h,
        blocks: checks,
        max_rel_error,
    })
}
