//! Numerical thresholds used across the crate.
//!
//! Every constant here is relative to a problem scale noted in its doc line;
//! absolute comparisons appear nowhere else in the crate. Changing one of
//! these changes accept/reject behaviour, so they are pinned in one place.

/// A matrix counts as singular when its smallest singular value falls at or
/// below this multiple of its largest.
pub const SINGULAR_REL: f64 = 1e-10;

/// Antisymmetry defect allowance for commutation matrices, relative to
/// `1 + max |entry|`.
pub const ASYM_REL: f64 = 1e-12;

/// Weight spectra may dip below zero by this multiple of the spectral norm of
/// the lag-zero weight before being flagged.
pub const PSD_REL: f64 = 1e-9;

/// Number of circle points scanned when checking weight spectra positivity.
pub const PSD_GRID: usize = 512;

/// Half-width of the undecidable band around a zero stability margin.
pub const HURWITZ: f64 = 1e-9;

/// Lyapunov solve residual target, relative to `|A||X| + |V|` in Frobenius
/// norms.
pub const ALE_RESIDUAL: f64 = 1e-10;

/// Hermitian part extraction is reported, not rejected, up to this multiple
/// of the solution norm.
pub const HERMITIAN_DEFECT_REL: f64 = 1e-8;

/// Stability sweeps stop refining once the margin moves less than this
/// between successive grid doublings.
pub const MARGIN: f64 = 1e-8;

/// Smallest and largest circle grids a stability sweep will use.
pub const MIN_GRID: usize = 16;
pub const MAX_GRID: usize = 8192;

/// Default starting grid for mean-over-circle quadrature.
pub const QUAD_DEFAULT: usize = 256;

/// Quadrature point cap; the effective cap is this or twice the requested
/// start, whichever is larger.
pub const QUAD_MAX: usize = 4096;

/// Relative change under grid doubling at which quadrature is accepted.
pub const QUAD_REL: f64 = 1e-9;

/// Default stationarity threshold multiplier; the descent stops when the
/// gradient norm falls below `stationarity_tol * (1 + initial gradient norm)`.
pub const STATIONARITY_REL: f64 = 1e-7;

/// Backtracking gives up once the step shrinks below this.
pub const STEP_UNDERFLOW: f64 = 1e-14;

/// Largest state dimension the dense finite-network path will assemble.
pub const ORACLE_DIM_CAP: usize = 256;

/// Modulus slack accepted when a caller supplies a circle point directly.
pub const OFF_CIRCLE: f64 = 1e-12;
