//! Per-frequency assembly: circle grids, the closed-loop drift symbol, the
//! noise intensity it is driven by, and weight spectra.
//!
//! On a ring every cell sees the same neighbourhood, so the infinite (or
//! finite) network block-diagonalizes over the unit circle. All solvers in
//! this crate work one circle point at a time through the types here.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    b_from_coupling, cost_output_matrix, coupling_drift, drift_blocks, NetworkSpec, NodeDims,
    OffsetFamily, WeightSequence,
};
use crate::tol;

/// How a grid covers the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// The `n`-th roots of unity; matches an `n`-cell ring exactly.
    RootsOfUnity,
    /// Uniform points for quadrature over the whole circle.
    Uniform,
}

/// Points on the unit circle, conjugate-closed by construction.
///
/// Points in the closed upper half plane are produced by `exp`; each lower
/// point is the bitwise conjugate of its mirror, and multiples of the
/// quarter turn are stored exactly. Both properties keep conjugate-symmetry
/// identities sharp in tests and quadrature.
#[derive(Clone, Debug)]
pub struct FrequencyGrid {
    kind: GridKind,
    points: Vec<Complex64>,
}

pub(crate) fn circle_points(count: usize) -> Vec<Complex64> {
    assert!(count > 0, "a circle grid needs at least one point");
    let mut pts = vec![Complex64::new(1.0, 0.0); count];
    for j in 1..count {
        pts[j] = if (4 * j) % count == 0 {
            match (4 * j / count) % 4 {
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                3 => Complex64::new(0.0, -1.0),
                _ => Complex64::new(1.0, 0.0),
            }
        } else if 2 * j < count {
            Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / count as f64)
        } else {
            pts[count - j].conj()
        };
    }
    pts
}

impl FrequencyGrid {
    /// The `n`-th roots of unity in counterclockwise order from 1.
    pub fn roots_of_unity(n: usize) -> Self {
        Self {
            kind: GridKind::RootsOfUnity,
            points: circle_points(n),
        }
    }

    /// `p` uniform circle points in counterclockwise order from 1.
    pub fn uniform(p: usize) -> Self {
        Self {
            kind: GridKind::Uniform,
            points: circle_points(p),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
}

fn check_on_circle(z: Complex64) -> Result<()> {
    let modulus = z.norm();
    if (modulus - 1.0).abs() > tol::OFF_CIRCLE {
        return Err(Error::OffCircle { modulus });
    }
    Ok(())
}

/// Symbol of one offset family: `sum_l z^{-l} F_l`, or `sum_l z^{+l} F_l`
/// when `reversed` (used by the family that acts against the ring
/// orientation).
fn family_symbol(family: &OffsetFamily, z: Complex64, reversed: bool) -> DMatrix<Complex64> {
    let mut acc = DMatrix::<Complex64>::zeros(family.rows(), family.cols());
    for (l, block) in family.iter() {
        let power = if reversed { l } else { -l } as i32;
        let w = z.powi(power);
        acc += block.map(|x| w.scale(x));
    }
    acc
}

/// Everything needed to evaluate the closed loop at any circle point,
/// prepared once per controller point.
#[derive(Clone, Debug)]
pub struct LoopBlocks {
    dims: NodeDims,
    plant_drift: OffsetFamily,
    ctrl_drift: OffsetFamily,
    coupling_onto_plant: OffsetFamily,
    coupling_onto_ctrl: OffsetFamily,
    gain: DMatrix<f64>,
    intensity: DMatrix<Complex64>,
    noise_v: DMatrix<Complex64>,
    output: DMatrix<f64>,
    output_c: DMatrix<Complex64>,
    theta1_c: DMatrix<Complex64>,
    theta2_c: DMatrix<Complex64>,
    theta_c: DMatrix<Complex64>,
    weights: WeightSequence,
}

impl LoopBlocks {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        let dims = spec.dims();
        let b1 = b_from_coupling(spec.theta1(), spec.m1())?;
        let b2 = b_from_coupling(spec.theta2(), spec.m2())?;
        let plant_drift = drift_blocks(spec.theta1(), spec.plant_energy(), &b1, &spec.noise1())?;
        let ctrl_drift = drift_blocks(
            spec.theta2(),
            spec.controller().r2(),
            &b2,
            &spec.noise2(),
        )?;

        // The tunable coupling acts at offset zero; wider declared ranges
        // keep their outer blocks at zero.
        let half = dims.d_tilde;
        let mut coupling_blocks =
            vec![DMatrix::zeros(dims.plant_vars(), dims.ctrl_vars()); 2 * half + 1];
        coupling_blocks[half] = spec.controller().rt0().clone();
        let coupling = OffsetFamily::new(half, coupling_blocks)?;
        let (coupling_onto_plant, coupling_onto_ctrl) =
            coupling_drift(spec.theta1(), spec.theta2(), &coupling)?;

        let gain = linalg::block_diag(&b1, &b2);
        let intensity = linalg::block_diag_c(&spec.noise1().intensity(), &spec.noise2().intensity());
        let gain_c = linalg::to_complex(&gain);
        let noise_v = &gain_c * &intensity * gain_c.transpose();

        let output = cost_output_matrix(dims.n1, spec.controller().rt0());
        let theta = linalg::block_diag(spec.theta1().matrix(), spec.theta2().matrix());
        Ok(Self {
            dims,
            plant_drift,
            ctrl_drift,
            coupling_onto_plant,
            coupling_onto_ctrl,
            gain,
            intensity,
            noise_v,
            output_c: linalg::to_complex(&output),
            output,
            theta1_c: linalg::to_complex(spec.theta1().matrix()),
            theta2_c: linalg::to_complex(spec.theta2().matrix()),
            theta_c: linalg::to_complex(&theta),
            weights: spec.weights().clone(),
        })
    }

    pub fn dims(&self) -> NodeDims {
        self.dims
    }

    /// Closed-loop drift symbol at `z`.
    ///
    /// The plant row couples to controller cells along the ring orientation;
    /// the controller row reads plant cells against it, which is what makes
    /// the loop realizable cell by cell. That orientation flip shows up here
    /// as the reversed power in the lower-left block.
    pub fn symbol(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        check_on_circle(z)?;
        let np = self.dims.plant_vars();
        let nc = self.dims.ctrl_vars();
        let mut a = DMatrix::<Complex64>::zeros(np + nc, np + nc);
        a.view_mut((0, 0), (np, np))
            .copy_from(&family_symbol(&self.plant_drift, z, false));
        a.view_mut((0, np), (np, nc))
            .copy_from(&family_symbol(&self.coupling_onto_plant, z, false));
        a.view_mut((np, 0), (nc, np))
            .copy_from(&family_symbol(&self.coupling_onto_ctrl, z, true));
        a.view_mut((np, np), (nc, nc))
            .copy_from(&family_symbol(&self.ctrl_drift, z, false));
        Ok(a)
    }

    /// Noise intensity `B Omega B^T` of the assembled loop; independent of
    /// the circle point.
    pub fn noise_intensity(&self) -> &DMatrix<Complex64> {
        &self.noise_v
    }

    /// Stacked field gain `blkdiag(B1, B2)`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// Stacked quantum Ito intensity `blkdiag(Omega1, Omega2)`.
    pub fn ito(&self) -> &DMatrix<Complex64> {
        &self.intensity
    }

    /// Output comparison matrix of the performance functional.
    pub fn output(&self) -> &DMatrix<f64> {
        &self.output
    }

    pub(crate) fn output_c(&self) -> &DMatrix<Complex64> {
        &self.output_c
    }

    pub(crate) fn theta1_c(&self) -> &DMatrix<Complex64> {
        &self.theta1_c
    }

    pub(crate) fn theta2_c(&self) -> &DMatrix<Complex64> {
        &self.theta2_c
    }

    /// Stacked commutation matrix `blkdiag(theta1, theta2)` as a complex
    /// matrix.
    pub fn theta_c(&self) -> &DMatrix<Complex64> {
        &self.theta_c
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    /// The four per-cell drift families, for explicit ring assembly.
    pub fn families(&self) -> DriftFamilies<'_> {
        DriftFamilies {
            plant: &self.plant_drift,
            ctrl: &self.ctrl_drift,
            onto_plant: &self.coupling_onto_plant,
            onto_ctrl: &self.coupling_onto_ctrl,
        }
    }

    /// Full per-frequency description at `z`.
    pub fn closed_loop(&self, z: Complex64) -> Result<ClosedLoopSymbol> {
        Ok(ClosedLoopSymbol {
            z,
            a: self.symbol(z)?,
            b: self.gain.clone(),
            omega: self.intensity.clone(),
        })
    }
}

/// Borrowed view of the four drift families: intra-layer hops for each
/// layer plus the two coupling directions.
#[derive(Clone, Copy, Debug)]
pub struct DriftFamilies<'a> {
    pub plant: &'a OffsetFamily,
    pub ctrl: &'a OffsetFamily,
    pub onto_plant: &'a OffsetFamily,
    pub onto_ctrl: &'a OffsetFamily,
}

/// Drift symbol, field gain, and Ito intensity at one circle point.
#[derive(Clone, Debug)]
pub struct ClosedLoopSymbol {
    pub z: Complex64,
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<f64>,
    pub omega: DMatrix<Complex64>,
}

impl ClosedLoopSymbol {
    pub fn assemble(spec: &NetworkSpec, z: Complex64) -> Result<Self> {
        LoopBlocks::from_spec(spec)?.closed_loop(z)
    }
}

/// Closed-loop drift symbol at `z`.
pub fn symbol_a(spec: &NetworkSpec, z: Complex64) -> Result<DMatrix<Complex64>> {
    LoopBlocks::from_spec(spec)?.symbol(z)
}

/// Noise intensity `B Omega B^T` of the assembled loop.
pub fn symbol_noise(spec: &NetworkSpec) -> Result<DMatrix<Complex64>> {
    Ok(LoopBlocks::from_spec(spec)?.noise_intensity().clone())
}

/// Weight spectral density at `z`.
pub fn sigma_of_z(weights: &WeightSequence, z: Complex64) -> Result<DMatrix<Complex64>> {
    check_on_circle(z)?;
    Ok(weights.symbol(z))
}

/// Triangularly damped partial density matching an `n`-cell ring.
pub fn cesaro_sigma(weights: &WeightSequence, n: usize, z: Complex64) -> Result<DMatrix<Complex64>> {
    if n == 0 {
        return Err(Error::Config("ring size must be positive".into()));
    }
    check_on_circle(z)?;
    Ok(weights.cesaro(n, z))
}

/// Writes a curve sampled over circle points as CSV: `re_z,im_z` followed by
/// one column per named value.
pub fn write_grid_csv<W: Write>(
    mut w: W,
    value_names: &[&str],
    rows: &[(Complex64, Vec<f64>)],
) -> io::Result<()> {
    write!(w, "re_z,im_z")?;
    for name in value_names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (z, values) in rows {
        write!(w, "{:.16e},{:.16e}", z.re, z.im)?;
        for v in values {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Column names for a drift-symbol grid dump: entries flattened row-major
/// into `re_a_r_c`/`im_a_r_c` pairs.
pub fn symbol_grid_columns(dim: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(2 * dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            names.push(format!("re_a_{r}_{c}"));
            names.push(format!("im_a_{r}_{c}"));
        }
    }
    names
}

/// Drift symbol sampled over a grid, flattened to match
/// [`symbol_grid_columns`]; feed the rows to [`write_grid_csv`].
pub fn symbol_grid_rows(
    spec: &NetworkSpec,
    grid: &FrequencyGrid,
) -> Result<Vec<(Complex64, Vec<f64>)>> {
    let blocks = LoopBlocks::from_spec(spec)?;
    let dim = blocks.dims().loop_vars();
    let mut rows = Vec::with_capacity(grid.len());
    for &z in grid.points() {
        let a = blocks.symbol(z)?;
        let mut values = Vec::with_capacity(2 * dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                values.push(a[(r, c)].re);
                values.push(a[(r, c)].im);
            }
        }
        rows.push((z, values));
    }
    Ok(rows)
}
