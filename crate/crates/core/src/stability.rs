//! Stability of the translation-invariant closed loop.
//!
//! The loop is exponentially stabilizing exactly when the drift symbol is
//! Hurwitz at every point of the unit circle. The sweep here tracks the
//! largest eigenvalue real part over nested circle grids, doubling until the
//! margin stops moving, and reports a three-way verdict with an explicit
//! undecidable band around zero.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{circle_points, LoopBlocks};
use crate::model::NetworkSpec;
use crate::tol;

/// Grid policy for a margin sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSettings {
    /// First grid size; a power of two, at least [`tol::MIN_GRID`].
    pub initial_grid: usize,
    /// Refinement stops once the next doubling would pass this.
    pub max_grid: usize,
    /// Margin movement under one doubling below which the sweep is
    /// considered resolved.
    pub margin_tol: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            initial_grid: 64,
            max_grid: tol::MAX_GRID,
            margin_tol: tol::MARGIN,
        }
    }
}

impl SweepSettings {
    /// Faster policy used inside line searches, where margins are healthy
    /// and re-checked often.
    pub fn quick() -> Self {
        Self {
            initial_grid: 64,
            max_grid: 4096,
            margin_tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.initial_grid < tol::MIN_GRID || !self.initial_grid.is_power_of_two() {
            return Err(Error::Config(format!(
                "initial grid must be a power of two of at least {}, got {}",
                tol::MIN_GRID,
                self.initial_grid
            )));
        }
        if self.max_grid < self.initial_grid {
            return Err(Error::Config(
                "maximum grid must be at least the initial grid".into(),
            ));
        }
        if !(self.margin_tol.is_finite() && self.margin_tol > 0.0) {
            return Err(Error::Config("margin tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Three-way answer of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stabilizing,
    NotStabilizing,
    /// The margin sits inside the undecidable band around zero.
    Inconclusive,
}

/// Margin, witness point, and verdict of one sweep.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// Largest eigenvalue real part found over the final grid.
    pub margin: f64,
    /// Circle point attaining the margin.
    pub worst_z: Complex64,
    /// Final grid size.
    pub grid: usize,
    /// Whether the margin movement tolerance was met before the grid cap.
    pub refined: bool,
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn is_stabilizing(&self) -> bool {
        self.verdict == Verdict::Stabilizing
    }
}

fn margin_of<F>(symbol: &F, z: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<DMatrix<Complex64>> + Sync,
{
    linalg::spectral_abscissa(&symbol(z)?)
}

fn margins_of<F>(symbol: &F, points: &[Complex64]) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<DMatrix<Complex64>> + Sync,
{
    // Collect everything, then pick the first error in point order, so the
    // reported failure does not depend on thread scheduling.
    let raw: Vec<Result<f64>> = points
        .par_iter()
        .map(|&z| margin_of(symbol, z))
        .collect();
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        out.push(r?);
    }
    Ok(out)
}

/// Sweeps an arbitrary symbol over nested circle grids.
///
/// Each doubling evaluates only the new midpoints; grids are nested, so the
/// running maximum over all evaluated points equals the maximum over the
/// current grid. Ties keep the earliest witness, which makes the reported
/// `worst_z` deterministic.
pub fn sweep_symbol<F>(symbol: F, settings: &SweepSettings) -> Result<StabilityReport>
where
    F: Fn(Complex64) -> Result<DMatrix<Complex64>> + Sync,
{
    settings.validate()?;
    let mut grid = settings.initial_grid;

    let first = circle_points(grid);
    let margins = margins_of(&symbol, &first)?;
    let mut best = 0_usize;
    for (i, &m) in margins.iter().enumerate() {
        if m > margins[best] {
            best = i;
        }
    }
    let mut margin = margins[best];
    let mut worst = first[best];

    let mut refined = false;
    while grid * 2 <= settings.max_grid {
        let doubled = circle_points(grid * 2);
        let odd: Vec<Complex64> = doubled.iter().skip(1).step_by(2).copied().collect();
        let odd_margins = margins_of(&symbol, &odd)?;
        let mut new_margin = margin;
        let mut new_worst = worst;
        for (i, &m) in odd_margins.iter().enumerate() {
            if m > new_margin {
                new_margin = m;
                new_worst = odd[i];
            }
        }
        grid *= 2;
        let moved = new_margin - margin;
        margin = new_margin;
        worst = new_worst;
        if moved.abs() < settings.margin_tol {
            refined = true;
            break;
        }
    }

    let verdict = if margin < -tol::HURWITZ {
        Verdict::Stabilizing
    } else if margin > tol::HURWITZ {
        Verdict::NotStabilizing
    } else {
        Verdict::Inconclusive
    };
    Ok(StabilityReport {
        margin,
        worst_z: worst,
        grid,
        refined,
        verdict,
    })
}

/// Sweeps the closed-loop drift symbol of a network description.
pub fn stability_sweep(spec: &NetworkSpec, settings: &SweepSettings) -> Result<StabilityReport> {
    let blocks = LoopBlocks::from_spec(spec)?;
    sweep_symbol(move |z| blocks.symbol(z), settings)
}

/// Margin of the drift symbol at each point of a fixed grid, for curve
/// output.
pub fn margin_curve(spec: &NetworkSpec, grid: usize) -> Result<Vec<(Complex64, f64)>> {
    let blocks = LoopBlocks::from_spec(spec)?;
    let points = circle_points(grid);
    let margins = margins_of(&|z| blocks.symbol(z), &points)?;
    Ok(points.into_iter().zip(margins).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_chain(offset: f64) -> impl Fn(Complex64) -> Result<DMatrix<Complex64>> + Sync {
        // Symbol -2 + z + z^{-1} + offset: margin is offset at z = 1.
        move |z: Complex64| {
            let v = Complex64::new(-2.0 + offset, 0.0) + z + z.powi(-1);
            Ok(DMatrix::from_element(1, 1, v))
        }
    }

    #[test]
    fn scalar_chain_margin_at_unity() {
        let report = sweep_symbol(scalar_chain(1.0), &SweepSettings::default()).unwrap();
        assert!((report.margin - 1.0).abs() < 1e-12);
        assert_eq!(report.worst_z, Complex64::new(1.0, 0.0));
        assert_eq!(report.verdict, Verdict::NotStabilizing);
        assert!(report.refined);
    }

    #[test]
    fn damped_scalar_chain_is_stabilizing() {
        let report = sweep_symbol(scalar_chain(-1.0), &SweepSettings::default()).unwrap();
        assert!((report.margin + 1.0).abs() < 1e-12);
        assert_eq!(report.verdict, Verdict::Stabilizing);
    }

    #[test]
    fn marginal_symbol_is_inconclusive() {
        let report = sweep_symbol(scalar_chain(0.0), &SweepSettings::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
        assert!(report.margin.abs() <= tol::HURWITZ);
    }

    #[test]
    fn margins_grow_monotonically_under_refinement() {
        // Sharp peak near an irrational angle; coarse grids underestimate.
        let peaked = |z: Complex64| {
            let target = Complex64::from_polar(1.0, 2.0);
            let closeness = -((z - target).norm_sqr());
            Ok(DMatrix::from_element(
                1,
                1,
                Complex64::new(closeness, 0.0),
            ))
        };
        let mut last = f64::NEG_INFINITY;
        for grid in [16_usize, 32, 64, 128, 256] {
            let settings = SweepSettings {
                initial_grid: grid,
                max_grid: grid,
                margin_tol: tol::MARGIN,
            };
            let report = sweep_symbol(peaked, &settings).unwrap();
            assert!(report.margin >= last - 1e-15, "grid {grid}");
            last = report.margin;
        }
    }

    #[test]
    fn settings_validation() {
        let bad = SweepSettings {
            initial_grid: 12,
            ..SweepSettings::default()
        };
        assert!(matches!(
            sweep_symbol(scalar_chain(-1.0), &bad),
            Err(Error::Config(_))
        ));
    }
}
