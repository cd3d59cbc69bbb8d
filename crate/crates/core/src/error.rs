//! Error type shared by every module in the crate.

use thiserror::Error;

/// Failure modes surfaced by model assembly, solvers, and synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Matrix or block dimensions do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A commutation matrix (or another matrix that must be inverted) is
    /// numerically singular.
    #[error("matrix is numerically singular (smallest singular value {sigma_min:.3e})")]
    Singular { sigma_min: f64 },

    /// A drift matrix has an eigenvalue at or right of the imaginary axis.
    #[error("drift is not Hurwitz (largest eigenvalue real part {max_real:.3e})")]
    NotHurwitz { max_real: f64 },

    /// A Lyapunov solve finished but its residual exceeds the accuracy target.
    #[error("solve residual {achieved:.3e} exceeds target {target:.3e}")]
    IllConditioned { achieved: f64, target: f64 },

    /// A frequency argument does not lie on the unit circle.
    #[error("point is off the unit circle (modulus {modulus:.17})")]
    OffCircle { modulus: f64 },

    /// The closed loop fails the stability test.
    #[error("network is not stabilizing (stability margin {margin:.3e})")]
    NotStabilizing { margin: f64 },

    /// The stability margin sits inside the undecidable band around zero at
    /// the finest affordable grid.
    #[error("stability verdict is inconclusive at grid {grid} (margin {margin:.3e})")]
    Inconclusive { margin: f64, grid: usize },

    /// Adaptive quadrature hit its point cap before the requested accuracy.
    #[error("quadrature did not converge within {max_points} points (last change {last_change:.3e})")]
    NoConvergence { max_points: usize, last_change: f64 },

    /// Gradient formulas cover nearest-cell plant-controller coupling only.
    #[error("coupling range {d_tilde} is unsupported here (gradients require a single coupling block)")]
    UnsupportedCoupling { d_tilde: usize },

    /// Backtracking reduced the step below the underflow floor without
    /// finding an acceptable point.
    #[error("line search stalled (step {step:.3e} underflowed)")]
    Stalled { step: f64 },

    /// A finite-difference probe left the set of stabilizing gains.
    #[error("finite-difference step leaves the stabilizing set")]
    StepLeavesStabilizingSet,

    /// Ring size too small for the interaction ranges to be unambiguous.
    #[error("ring size {n} is too small for the coupling ranges (need more than {min} cells)")]
    RingTooSmall { n: usize, min: usize },

    /// A direct finite-network build would exceed the dense-solver cap.
    #[error("finite network dimension {dim} exceeds the cap {cap}")]
    OracleTooLarge { dim: usize, cap: usize },

    /// Output selection matrix does not pick out a valid channel subset.
    #[error("output selection is not a channel subset (defect {defect:.3e})")]
    OutputSelection { defect: f64 },

    /// Eigenvalue or Schur iteration failed to converge.
    #[error("eigenvalue iteration failed to converge")]
    EigFailure,

    /// A configuration value is out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A network description file is malformed or inconsistent.
    #[error("invalid network description: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
