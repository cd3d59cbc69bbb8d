//! Node-level model data for a ring of identical plant cells, each paired
//! with an identical controller cell.
//!
//! Everything here is per-cell: commutation matrices, quadratic energy
//! blocks, field couplings, and the weight sequence of the performance
//! functional. Per-frequency assembly lives in [`crate::spectral`]; explicit
//! finite rings live in [`crate::oracle`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol;

/// The 2x2 rotation generator; elementary block of every commutation and
/// noise structure matrix in this crate.
pub(crate) fn symplectic_unit() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Block-diagonal structure matrix of order `2m`: one rotation generator per
/// conjugate pair.
pub(crate) fn symplectic(m: usize) -> DMatrix<f64> {
    DMatrix::<f64>::identity(m, m).kronecker(&symplectic_unit())
}

/// Cell sizes and interaction ranges of the closed loop.
///
/// Subscript 1 refers to plant cells, subscript 2 to controller cells. A
/// cell with `n` internal modes carries `2n` quadrature variables; `m` is the
/// number of quantum noise channels driving each cell. `d1` and `d2` are the
/// intra-layer hopping ranges and `d_tilde` the plant-controller coupling
/// range, all in cell counts along the ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeDims {
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
    pub d1: usize,
    pub d2: usize,
    pub d_tilde: usize,
}

impl NodeDims {
    pub fn new(
        n1: usize,
        n2: usize,
        m1: usize,
        m2: usize,
        d1: usize,
        d2: usize,
        d_tilde: usize,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 || m1 == 0 || m2 == 0 {
            return Err(Error::Dimension(
                "mode and channel counts must be positive".into(),
            ));
        }
        Ok(Self {
            n1,
            n2,
            m1,
            m2,
            d1,
            d2,
            d_tilde,
        })
    }

    /// Quadrature variables per plant cell.
    pub fn plant_vars(&self) -> usize {
        2 * self.n1
    }

    /// Quadrature variables per controller cell.
    pub fn ctrl_vars(&self) -> usize {
        2 * self.n2
    }

    /// Joint per-cell state dimension of the closed loop.
    pub fn loop_vars(&self) -> usize {
        self.plant_vars() + self.ctrl_vars()
    }

    /// Order of each weight block: plant variables stacked with the
    /// controller-shaped output they are compared against.
    pub fn weight_order(&self) -> usize {
        4 * self.n1
    }

    /// Largest interaction range appearing anywhere in the loop.
    pub fn max_range(&self) -> usize {
        self.d1.max(self.d2).max(self.d_tilde)
    }
}

/// Real antisymmetric nonsingular matrix fixing the commutation structure of
/// one cell's quadrature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CcrMatrix {
    m: DMatrix<f64>,
}

impl CcrMatrix {
    /// Wraps an explicit matrix. Only shape is enforced here; antisymmetry
    /// and invertibility are scored by [`validate_spec`] so that a slightly
    /// perturbed description can still be loaded and diagnosed.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "commutation matrix must be square of even positive order, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { m })
    }

    /// Canonical structure for `n` modes: the block-diagonal of `n` rotation
    /// generators.
    pub fn canonical(n: usize) -> Self {
        Self { m: symplectic(n) }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Largest entry of `theta + theta^T`.
    pub fn antisymmetry_defect(&self) -> f64 {
        linalg::max_abs(&(&self.m + self.m.transpose()))
    }

    /// Inverse, guarded against near-singularity relative to the largest
    /// singular value.
    pub fn checked_inverse(&self) -> Result<DMatrix<f64>> {
        let (hi, lo) = linalg::singular_extremes(&self.m);
        if lo <= tol::SINGULAR_REL * hi {
            return Err(Error::Singular { sigma_min: lo });
        }
        self.m
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: lo })
    }

    pub(crate) fn singular_extremes(&self) -> (f64, f64) {
        linalg::singular_extremes(&self.m)
    }
}

/// Quantum noise bookkeeping for one cell: `channels` input fields, hence
/// `2 * channels` field quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseModel {
    channels: usize,
}

impl NoiseModel {
    pub fn new(channels: usize) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Dimension("at least one noise channel".into()));
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Field quadrature count `2 * channels`.
    pub fn dim(&self) -> usize {
        2 * self.channels
    }

    /// Commutation structure of the field quadratures.
    pub fn structure(&self) -> DMatrix<f64> {
        symplectic(self.channels)
    }

    /// Quantum Ito intensity `I + i J`: Hermitian, positive semidefinite,
    /// eigenvalues 0 and 2.
    pub fn intensity(&self) -> DMatrix<Complex64> {
        let j = self.structure();
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            let diag = if r == c { 1.0 } else { 0.0 };
            Complex64::new(diag, j[(r, c)])
        })
    }
}

/// Quadratic energy profile of one layer: the self block `R0` plus hopping
/// blocks `R1..Rd` toward increasing cell index. The block toward decreasing
/// index at range `l` is `Rl^T`, so the profile is determined by this half.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBlocks {
    r0: DMatrix<f64>,
    rpos: Vec<DMatrix<f64>>,
}

impl EnergyBlocks {
    /// The self block is symmetrized exactly on entry; hopping blocks are
    /// free square matrices of the same order.
    pub fn new(r0: DMatrix<f64>, rpos: Vec<DMatrix<f64>>) -> Result<Self> {
        if !r0.is_square() || r0.nrows() == 0 {
            return Err(Error::Dimension("self energy block must be square".into()));
        }
        let order = r0.nrows();
        for (i, r) in rpos.iter().enumerate() {
            if r.nrows() != order || r.ncols() != order {
                return Err(Error::Dimension(format!(
                    "hopping block {} is {}x{}, expected {}x{}",
                    i + 1,
                    r.nrows(),
                    r.ncols(),
                    order,
                    order
                )));
            }
        }
        let r0 = (&r0 + r0.transpose()).scale(0.5);
        Ok(Self { r0, rpos })
    }

    /// Profile with no hopping terms.
    pub fn local(r0: DMatrix<f64>) -> Result<Self> {
        Self::new(r0, Vec::new())
    }

    pub fn order(&self) -> usize {
        self.r0.nrows()
    }

    /// Hopping range `d`.
    pub fn range(&self) -> usize {
        self.rpos.len()
    }

    pub fn r0(&self) -> &DMatrix<f64> {
        &self.r0
    }

    /// Blocks `R1..Rd` toward increasing cell index.
    pub fn positive(&self) -> &[DMatrix<f64>] {
        &self.rpos
    }

    /// Block at signed range `l`; transposed for `l < 0`, zero beyond the
    /// range.
    pub fn block(&self, l: i64) -> DMatrix<f64> {
        let a = l.unsigned_abs() as usize;
        if a == 0 {
            self.r0.clone()
        } else if a <= self.rpos.len() {
            let r = &self.rpos[a - 1];
            if l > 0 {
                r.clone()
            } else {
                r.transpose()
            }
        } else {
            DMatrix::zeros(self.order(), self.order())
        }
    }

    /// Spatial symbol `sum_l z^{-l} Rl`. Hermitian by construction for `z`
    /// on the unit circle: each hopping term is added together with its
    /// adjoint.
    pub fn symbol(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.r0.nrows();
        let mut one_sided = DMatrix::<Complex64>::zeros(n, n);
        for (i, r) in self.rpos.iter().enumerate() {
            let w = z.powi(-((i + 1) as i32));
            one_sided += r.map(|x| w.scale(x));
        }
        // Entry (r, c) becomes t + conj(s) and entry (c, r) becomes s +
        // conj(t): one commutative addition each, so the result is Hermitian
        // to the last bit.
        let adjoint = one_sided.adjoint();
        linalg::to_complex(&self.r0) + (one_sided + adjoint)
    }
}

/// The tunable controller parameters: controller-layer energy profile and
/// the local plant-controller coupling block.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerPoint {
    r2: EnergyBlocks,
    rt0: DMatrix<f64>,
}

impl ControllerPoint {
    pub fn new(r2: EnergyBlocks, rt0: DMatrix<f64>) -> Self {
        Self { r2, rt0 }
    }

    pub fn r2(&self) -> &EnergyBlocks {
        &self.r2
    }

    pub fn rt0(&self) -> &DMatrix<f64> {
        &self.rt0
    }
}

/// Weights of the performance functional: a square-summable sequence of
/// blocks, one per cell offset, with the lag-zero block symmetric and the
/// block at offset `-k` fixed to the transpose of the one at `+k`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    sigma: Vec<DMatrix<f64>>,
}

impl WeightSequence {
    /// `sigma[k]` weights cell pairs `k` apart; `sigma[0]` is symmetrized
    /// exactly on entry.
    pub fn new(sigma: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = sigma
            .first()
            .ok_or_else(|| Error::Dimension("weight sequence must not be empty".into()))?;
        if !first.is_square() || first.nrows() == 0 {
            return Err(Error::Dimension("weight blocks must be square".into()));
        }
        let order = first.nrows();
        for (k, s) in sigma.iter().enumerate() {
            if s.nrows() != order || s.ncols() != order {
                return Err(Error::Dimension(format!(
                    "weight block {k} is {}x{}, expected {order}x{order}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let mut sigma = sigma;
        sigma[0] = (&sigma[0] + sigma[0].transpose()).scale(0.5);
        Ok(Self { sigma })
    }

    pub fn order(&self) -> usize {
        self.sigma[0].nrows()
    }

    /// Largest offset with an explicit block.
    pub fn lag(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn sigma(&self, k: usize) -> &DMatrix<f64> {
        &self.sigma[k]
    }

    /// Spectral density `sum_k z^{-k} sigma_k` over all offsets, exactly
    /// Hermitian on the circle: positive offsets are summed one-sided and
    /// folded with their adjoint in a single commutative addition.
    pub fn symbol(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.order();
        let mut one_sided = DMatrix::<Complex64>::zeros(n, n);
        for (k, s) in self.sigma.iter().enumerate().skip(1) {
            let w = z.powi(-(k as i32));
            one_sided += s.map(|x| w.scale(x));
        }
        let adjoint = one_sided.adjoint();
        linalg::to_complex(&self.sigma[0]) + (one_sided + adjoint)
    }

    /// Triangularly damped partial density matching an `n`-cell ring: offset
    /// `k` enters with factor `1 - k/n` and offsets at or beyond `n` drop
    /// out. Hermitian to the last bit, like [`WeightSequence::symbol`].
    pub fn cesaro(&self, n: usize, z: Complex64) -> DMatrix<Complex64> {
        let order = self.order();
        let mut one_sided = DMatrix::<Complex64>::zeros(order, order);
        for (k, s) in self.sigma.iter().enumerate().skip(1) {
            if k >= n {
                break;
            }
            let damp = 1.0 - k as f64 / n as f64;
            let w = z.powi(-(k as i32)).scale(damp);
            one_sided += s.map(|x| w.scale(x));
        }
        let adjoint = one_sided.adjoint();
        linalg::to_complex(&self.sigma[0]) + (one_sided + adjoint)
    }
}

/// Complete description of one translation-invariant closed loop.
///
/// Immutable once built; dimension compatibility across all parts is
/// enforced here so downstream assembly can index blocks freely.
#[derive(Clone, Debug)]
pub struct NetworkSpec {
    dims: NodeDims,
    theta1: CcrMatrix,
    theta2: CcrMatrix,
    plant_energy: EnergyBlocks,
    m1: DMatrix<f64>,
    m2: DMatrix<f64>,
    noise1: NoiseModel,
    noise2: NoiseModel,
    weights: WeightSequence,
    controller: ControllerPoint,
}

impl NetworkSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: NodeDims,
        theta1: CcrMatrix,
        theta2: CcrMatrix,
        plant_energy: EnergyBlocks,
        m1: DMatrix<f64>,
        m2: DMatrix<f64>,
        weights: WeightSequence,
        controller: ControllerPoint,
    ) -> Result<Self> {
        if theta1.order() != dims.plant_vars() {
            return Err(Error::Dimension(format!(
                "plant commutation matrix order {} does not match 2*n1 = {}",
                theta1.order(),
                dims.plant_vars()
            )));
        }
        if theta2.order() != dims.ctrl_vars() {
            return Err(Error::Dimension(format!(
                "controller commutation matrix order {} does not match 2*n2 = {}",
                theta2.order(),
                dims.ctrl_vars()
            )));
        }
        if plant_energy.order() != dims.plant_vars() || plant_energy.range() != dims.d1 {
            return Err(Error::Dimension(
                "plant energy profile does not match the declared order or range".into(),
            ));
        }
        if controller.r2.order() != dims.ctrl_vars() || controller.r2.range() != dims.d2 {
            return Err(Error::Dimension(
                "controller energy profile does not match the declared order or range".into(),
            ));
        }
        if controller.rt0.nrows() != dims.plant_vars() || controller.rt0.ncols() != dims.ctrl_vars()
        {
            return Err(Error::Dimension(format!(
                "coupling block is {}x{}, expected {}x{}",
                controller.rt0.nrows(),
                controller.rt0.ncols(),
                dims.plant_vars(),
                dims.ctrl_vars()
            )));
        }
        if m1.nrows() != 2 * dims.m1 || m1.ncols() != dims.plant_vars() {
            return Err(Error::Dimension(format!(
                "plant field coupling is {}x{}, expected {}x{}",
                m1.nrows(),
                m1.ncols(),
                2 * dims.m1,
                dims.plant_vars()
            )));
        }
        if m2.nrows() != 2 * dims.m2 || m2.ncols() != dims.ctrl_vars() {
            return Err(Error::Dimension(format!(
                "controller field coupling is {}x{}, expected {}x{}",
                m2.nrows(),
                m2.ncols(),
                2 * dims.m2,
                dims.ctrl_vars()
            )));
        }
        if weights.order() != dims.weight_order() {
            return Err(Error::Dimension(format!(
                "weight blocks have order {}, expected {}",
                weights.order(),
                dims.weight_order()
            )));
        }
        let noise1 = NoiseModel::new(dims.m1)?;
        let noise2 = NoiseModel::new(dims.m2)?;
        Ok(Self {
            dims,
            theta1,
            theta2,
            plant_energy,
            m1,
            m2,
            noise1,
            noise2,
            weights,
            controller,
        })
    }

    pub fn dims(&self) -> NodeDims {
        self.dims
    }

    pub fn theta1(&self) -> &CcrMatrix {
        &self.theta1
    }

    pub fn theta2(&self) -> &CcrMatrix {
        &self.theta2
    }

    pub fn plant_energy(&self) -> &EnergyBlocks {
        &self.plant_energy
    }

    pub fn m1(&self) -> &DMatrix<f64> {
        &self.m1
    }

    pub fn m2(&self) -> &DMatrix<f64> {
        &self.m2
    }

    pub fn noise1(&self) -> NoiseModel {
        self.noise1
    }

    pub fn noise2(&self) -> NoiseModel {
        self.noise2
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn controller(&self) -> &ControllerPoint {
        &self.controller
    }

    /// Same loop with the tunable parameters replaced.
    pub fn with_controller(&self, controller: ControllerPoint) -> Result<Self> {
        Self::new(
            self.dims,
            self.theta1.clone(),
            self.theta2.clone(),
            self.plant_energy.clone(),
            self.m1.clone(),
            self.m2.clone(),
            self.weights.clone(),
            controller,
        )
    }
}

/// One failed structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Which part of the description failed.
    pub subject: String,
    /// Which property it failed.
    pub invariant: String,
    /// Size of the defect, in the scale natural to the property.
    pub magnitude: f64,
}

/// Outcome of [`validate_spec`]: empty means structurally admissible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scores the structural requirements a description must meet before any
/// solver runs: antisymmetric nonsingular commutation matrices and a
/// positive semidefinite weight spectrum along the circle.
pub fn validate_spec(spec: &NetworkSpec) -> ValidationReport {
    let mut violations = Vec::new();
    for (subject, theta) in [("theta1", spec.theta1()), ("theta2", spec.theta2())] {
        let defect = theta.antisymmetry_defect();
        if defect > tol::ASYM_REL * (1.0 + linalg::max_abs(theta.matrix())) {
            violations.push(Violation {
                subject: subject.into(),
                invariant: "antisymmetry".into(),
                magnitude: defect,
            });
        }
        let (hi, lo) = theta.singular_extremes();
        if lo <= tol::SINGULAR_REL * hi {
            violations.push(Violation {
                subject: subject.into(),
                invariant: "nonsingularity".into(),
                magnitude: lo,
            });
        }
    }

    let (sigma0_norm, _) = linalg::singular_extremes(spec.weights().sigma(0));
    let mut min_eig = f64::INFINITY;
    for j in 0..tol::PSD_GRID {
        let phi = std::f64::consts::TAU * j as f64 / tol::PSD_GRID as f64;
        let z = Complex64::from_polar(1.0, phi);
        let density = spec.weights().symbol(z);
        min_eig = min_eig.min(linalg::hermitian_min_eig(&density));
    }
    if min_eig < -tol::PSD_REL * sigma0_norm.max(1.0) {
        violations.push(Violation {
            subject: "weights".into(),
            invariant: "spectral density positive semidefinite".into(),
            magnitude: -min_eig,
        });
    }

    ValidationReport { violations }
}

/// A family of equally sized real blocks indexed by signed cell offset
/// `-half..=half`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetFamily {
    half: usize,
    rows: usize,
    cols: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl OffsetFamily {
    /// `blocks[l + half]` is the block at offset `l`.
    pub fn new(half: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.len() != 2 * half + 1 {
            return Err(Error::Dimension(format!(
                "offset family with half range {half} needs {} blocks, got {}",
                2 * half + 1,
                blocks.len()
            )));
        }
        let rows = blocks[0].nrows();
        let cols = blocks[0].ncols();
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("offset blocks must be nonempty".into()));
        }
        if blocks.iter().any(|b| b.nrows() != rows || b.ncols() != cols) {
            return Err(Error::Dimension(
                "offset blocks must all share one shape".into(),
            ));
        }
        Ok(Self {
            half,
            rows,
            cols,
            blocks,
        })
    }

    /// Family supported on offset zero only.
    pub fn from_center(center: DMatrix<f64>) -> Result<Self> {
        Self::new(0, vec![center])
    }

    pub fn half_range(&self) -> usize {
        self.half
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Block at signed offset `l`, which must satisfy `|l| <= half`.
    pub fn block(&self, l: i64) -> &DMatrix<f64> {
        let idx = l + self.half as i64;
        &self.blocks[idx as usize]
    }

    /// Offsets and blocks in increasing offset order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &DMatrix<f64>)> {
        let half = self.half as i64;
        self.blocks.iter().enumerate().map(move |(i, b)| (i as i64 - half, b))
    }
}

/// Field coupling gain `B = 2 theta M^T` of one layer.
pub fn b_from_coupling(theta: &CcrMatrix, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.ncols() != theta.order() {
        return Err(Error::Dimension(format!(
            "field coupling has {} columns, expected {}",
            m.ncols(),
            theta.order()
        )));
    }
    Ok((theta.matrix() * m.transpose()).scale(2.0))
}

/// Intra-layer drift blocks over offsets `-d..=d`.
///
/// The zero-offset block combines the energy term with the damping induced
/// by the field coupling; every other offset is purely energetic.
pub fn drift_blocks(
    theta: &CcrMatrix,
    energy: &EnergyBlocks,
    b: &DMatrix<f64>,
    noise: &NoiseModel,
) -> Result<OffsetFamily> {
    let order = theta.order();
    if energy.order() != order {
        return Err(Error::Dimension(format!(
            "energy profile order {} does not match commutation order {order}",
            energy.order()
        )));
    }
    if b.nrows() != order || b.ncols() != noise.dim() {
        return Err(Error::Dimension(format!(
            "field gain is {}x{}, expected {}x{}",
            b.nrows(),
            b.ncols(),
            order,
            noise.dim()
        )));
    }
    let theta_inv = theta.checked_inverse()?;
    let damping = (b * noise.structure() * b.transpose() * theta_inv).scale(0.5);
    let d = energy.range() as i64;
    let mut blocks = Vec::with_capacity(2 * energy.range() + 1);
    for l in -d..=d {
        let energetic = (theta.matrix() * energy.block(l)).scale(2.0);
        blocks.push(if l == 0 { energetic - &damping } else { energetic });
    }
    OffsetFamily::new(energy.range(), blocks)
}

/// Plant-controller drift blocks from the coupling profile.
///
/// Both layers share the same offset index: the first family scales the
/// coupling blocks, the second their transposes. In the assembled loop the
/// second family acts across the ring with the opposite index orientation;
/// [`crate::spectral`] and [`crate::oracle`] apply that flip.
pub fn coupling_drift(
    theta1: &CcrMatrix,
    theta2: &CcrMatrix,
    coupling: &OffsetFamily,
) -> Result<(OffsetFamily, OffsetFamily)> {
    if coupling.rows() != theta1.order() || coupling.cols() != theta2.order() {
        return Err(Error::Dimension(format!(
            "coupling blocks are {}x{}, expected {}x{}",
            coupling.rows(),
            coupling.cols(),
            theta1.order(),
            theta2.order()
        )));
    }
    let half = coupling.half_range();
    let mut onto_plant = Vec::with_capacity(2 * half + 1);
    let mut onto_ctrl = Vec::with_capacity(2 * half + 1);
    for (_, rt) in coupling.iter() {
        onto_plant.push((theta1.matrix() * rt).scale(2.0));
        onto_ctrl.push((theta2.matrix() * rt.transpose()).scale(2.0));
    }
    Ok((
        OffsetFamily::new(half, onto_plant)?,
        OffsetFamily::new(half, onto_ctrl)?,
    ))
}

/// Residual of the output non-demolition identity `theta C^T + B J D^T = 0`
/// in Frobenius norm.
///
/// `d` must select a subset of the field channels: `D J D^T` has to be a
/// principal structure submatrix, which is checked before the residual is
/// formed.
pub fn output_consistency(
    theta: &CcrMatrix,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    noise: &NoiseModel,
) -> Result<f64> {
    let order = theta.order();
    if b.nrows() != order || b.ncols() != noise.dim() {
        return Err(Error::Dimension("field gain shape mismatch".into()));
    }
    if c.ncols() != order || !c.nrows().is_multiple_of(2) || c.nrows() == 0 {
        return Err(Error::Dimension("output map shape mismatch".into()));
    }
    if d.nrows() != c.nrows() || d.ncols() != noise.dim() {
        return Err(Error::Dimension("output selection shape mismatch".into()));
    }

    let j = noise.structure();
    let p = d * &j * d.transpose();
    let mut defect = 0.0_f64;
    for x in p.iter() {
        let nearest = x.round();
        if (nearest - x).abs() > 1e-12 || nearest.abs() > 1.0 {
            defect = defect.max((nearest - x).abs().max(nearest.abs() - 1.0));
        }
    }
    defect = defect.max(linalg::max_abs(&(&p + p.transpose())));
    let q = p.nrows();
    defect = defect.max(linalg::max_abs(
        &(&p * &p + DMatrix::<f64>::identity(q, q)),
    ));
    if defect > 1e-12 {
        return Err(Error::OutputSelection { defect });
    }

    Ok((theta.matrix() * c.transpose() + b * j * d.transpose()).norm())
}

/// Output comparison matrix of the performance functional: plant variables
/// pass through unchanged, stacked over the coupling-shaped image of the
/// controller variables.
pub fn cost_output_matrix(n1: usize, rt0: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(
        rt0.nrows(),
        2 * n1,
        "coupling block rows must equal the plant variable count"
    );
    let rows = 4 * n1;
    let cols = 2 * n1 + rt0.ncols();
    let mut e = DMatrix::zeros(rows, cols);
    e.view_mut((0, 0), (2 * n1, 2 * n1))
        .copy_from(&DMatrix::identity(2 * n1, 2 * n1));
    e.view_mut((2 * n1, 2 * n1), rt0.shape()).copy_from(rt0);
    e
}
