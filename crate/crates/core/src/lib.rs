//! Coherent feedback design for translation-invariant linear quantum ring
//! networks.
//!
//! A ring of identical plant cells is interconnected field-wise with a ring
//! of identical controller cells. Translation invariance block-diagonalizes
//! the closed loop over the unit circle, so steady-state covariances, the
//! quadratic performance functional, and its gradients in the controller
//! parameters all reduce to small per-frequency computations averaged over
//! circle grids.
//!
//! Module map:
//!
//! * [`model`]: per-cell data (commutation, energy, couplings, weights) and
//!   structural validation.
//! * [`spectral`]: circle grids and per-frequency assembly of the loop.
//! * [`lyapunov`]: dense steady-state moment equation solver.
//! * [`stability`]: margin sweeps over nested circle grids.
//! * [`cost`]: finite-ring and thermodynamic cost, gradients, stationarity
//!   residuals.
//! * [`synthesis`]: gradient descent over the controller blocks and the
//!   finite-difference gradient check.
//! * [`oracle`]: explicit dense assembly of small finite rings, the
//!   reference path everything else is checked against.
//! * [`schema`]: JSON import and export.

pub mod cost;
pub mod error;
mod linalg;
pub mod lyapunov;
pub mod model;
pub mod oracle;
pub mod schema;
pub mod spectral;
pub mod stability;
pub mod synthesis;
pub mod tol;

pub use error::{Error, Result};
pub use model::{NetworkSpec, ValidationReport};
