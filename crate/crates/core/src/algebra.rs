//! Linear algebra over the eight-dimensional workspace
//! `{ψ+, ψ−} ⊗ {χ0, χ1} ⊗ {ê_H, ê_V}`.
//!
//! Amplitudes are stored transverse-major, then path, then polarization, so
//! the flat index of `(t, p, s)` is `4t + 2p + s`. Every embedding and every
//! serialized vector in this crate uses that ordering.

use std::fmt;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for exact algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Canonical ordering tag written into every serialized vector or matrix.
pub const ORDERING: &str = "t,p,s";

pub type C64 = Complex64;
pub type Matrix8 = SMatrix<C64, 8, 8>;
pub type Vector8 = SVector<C64, 8>;
/// Coefficients of `(ψ+, ψ−)` on one output port, or of `(ê_H, ê_V)`.
pub type Pair = Vector2<C64>;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("control and target act on the same degree of freedom ({0})")]
    SameDof(Dof),
    #[error("input vector has zero norm")]
    ZeroNorm,
    #[error("input vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("serialized ordering {0:?} is not \"t,p,s\"")]
    Ordering(String),
    #[error("expected {expected} entries, found {found}")]
    Length { expected: usize, found: usize },
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One of the three two-level degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dof {
    Transverse,
    Path,
    Polarization,
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dof::Transverse => "transverse",
            Dof::Path => "path",
            Dof::Polarization => "polarization",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transverse {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    P0,
    P1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
}

impl Transverse {
    pub const ALL: [Transverse; 2] = [Transverse::Plus, Transverse::Minus];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl Path {
    pub const ALL: [Path; 2] = [Path::P0, Path::P1];
    pub fn index(self) -> usize {
        self as usize
    }
    pub fn from_index(i: usize) -> Path {
        if i == 0 {
            Path::P0
        } else {
            Path::P1
        }
    }
}

impl Pol {
    pub const ALL: [Pol; 2] = [Pol::H, Pol::V];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// Flat workspace index of `(t, p, s)`.
pub fn flat_index(t: Transverse, p: Path, s: Pol) -> usize {
    4 * t.index() + 2 * p.index() + s.index()
}

/// Eight complex amplitudes over the workspace basis.
///
/// Global phase is kept as-is; comparisons that should ignore it must do so
/// explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Supermode {
    amp: Vector8,
}

impl Supermode {
    pub fn zero() -> Self {
        Supermode { amp: Vector8::zeros() }
    }

    pub fn basis(t: Transverse, p: Path, s: Pol) -> Self {
        let mut m = Self::zero();
        m.amp[flat_index(t, p, s)] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_vector(amp: Vector8) -> Self {
        Supermode { amp }
    }

    pub fn from_slice(values: &[C64]) -> Result<Self, AlgebraError> {
        if values.len() != 8 {
            return Err(AlgebraError::Length { expected: 8, found: values.len() });
        }
        Ok(Supermode { amp: Vector8::from_column_slice(values) })
    }

    pub fn amp(&self, t: Transverse, p: Path, s: Pol) -> C64 {
        self.amp[flat_index(t, p, s)]
    }

    pub fn set(&mut self, t: Transverse, p: Path, s: Pol, value: C64) {
        self.amp[flat_index(t, p, s)] = value;
    }

    pub fn as_vector(&self) -> &Vector8 {
        &self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Supermode { amp: self.amp * factor }
    }

    pub fn add(&self, other: &Supermode) -> Self {
        Supermode { amp: self.amp + other.amp }
    }

    /// Largest elementwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Supermode) -> f64 {
        self.amp.iter().zip(other.amp.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Total weight carried on one path.
    pub fn path_weight(&self, p: Path) -> f64 {
        let mut w = 0.0;
        for t in Transverse::ALL {
            for s in Pol::ALL {
                w += self.amp(t, p, s).norm_sqr();
            }
        }
        w
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ComplexArray::from_values(self.amp.iter().copied()))
            .expect("complex array serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SerdeError> {
        let arr: ComplexArray = serde_json::from_value(value.clone())?;
        Ok(Self::from_slice(&arr.values()?)?)
    }
}

impl fmt::Display for Supermode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in Transverse::ALL {
            for p in Path::ALL {
                for s in Pol::ALL {
                    let a = self.amp(t, p, s);
                    if a.norm() < 1e-15 {
                        continue;
                    }
                    if !first {
                        f.write_str(" + ")?;
                    }
                    first = false;
                    let ts = if t == Transverse::Plus { "+" } else { "-" };
                    write!(f, "({:.4}{:+.4}i) psi{}chi{}e{}", a.re, a.im, ts, p.index(), s)?;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// How a [`WorkspaceOperator`] was classified at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Unitary,
    Projector,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceOperator {
    matrix: Matrix8,
    kind: OperatorKind,
}

impl WorkspaceOperator {
    /// Wraps a matrix and classifies it as unitary, projector or general.
    pub fn new(matrix: Matrix8) -> Self {
        let kind = classify(&matrix);
        WorkspaceOperator { matrix, kind }
    }

    pub fn identity() -> Self {
        WorkspaceOperator { matrix: Matrix8::identity(), kind: OperatorKind::Unitary }
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_unitary(&self) -> bool {
        self.kind == OperatorKind::Unitary
    }

    /// `self` applied after `first`, i.e. the matrix product `self · first`.
    pub fn after(&self, first: &WorkspaceOperator) -> WorkspaceOperator {
        WorkspaceOperator::new(self.matrix * first.matrix)
    }

    pub fn adjoint(&self) -> WorkspaceOperator {
        WorkspaceOperator::new(self.matrix.adjoint())
    }

    pub fn max_abs_diff(&self, other: &WorkspaceOperator) -> f64 {
        max_abs_diff8(&self.matrix, &other.matrix)
    }

    pub fn to_json(&self) -> serde_json::Value {
        // nalgebra is column-major; the wire format is row-major.
        let values = (0..8).flat_map(|r| (0..8).map(move |c| (r, c))).map(|(r, c)| self.matrix[(r, c)]);
        serde_json::to_value(ComplexArray::from_values(values)).expect("complex array serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SerdeError> {
        let arr: ComplexArray = serde_json::from_value(value.clone())?;
        let values = arr.values()?;
        if values.len() != 64 {
            return Err(AlgebraError::Length { expected: 64, found: values.len() }.into());
        }
        Ok(WorkspaceOperator::new(Matrix8::from_row_slice(&values)))
    }
}

fn max_abs_diff8(a: &Matrix8, b: &Matrix8) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn classify(m: &Matrix8) -> OperatorKind {
    let id = Matrix8::identity();
    if max_abs_diff8(&(m.adjoint() * m), &id) <= ALGEBRA_TOL {
        OperatorKind::Unitary
    } else if max_abs_diff8(&(m * m), m) <= ALGEBRA_TOL && max_abs_diff8(&m.adjoint(), m) <= ALGEBRA_TOL {
        OperatorKind::Projector
    } else {
        OperatorKind::General
    }
}

#[derive(Debug, Error)]
pub enum SerdeError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Shape(#[from] AlgebraError),
}

/// Wire form shared by states and operators.
#[derive(Debug, Serialize, Deserialize)]
struct ComplexArray {
    ordering: String,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexArray {
    fn from_values(values: impl Iterator<Item = C64>) -> Self {
        let (re, im) = values.map(|z| (z.re, z.im)).unzip();
        ComplexArray { ordering: ORDERING.to_string(), re, im }
    }

    fn values(&self) -> Result<Vec<C64>, AlgebraError> {
        if self.ordering != ORDERING {
            return Err(AlgebraError::Ordering(self.ordering.clone()));
        }
        if self.re.len() != self.im.len() {
            return Err(AlgebraError::Length { expected: self.re.len(), found: self.im.len() });
        }
        Ok(self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

/// Named 2×2 operators. `Custom` covers anything assembled by hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateLabel {
    I,
    H,
    X,
    Z,
    XZ,
    Hwp(f64),
    Qwp(f64),
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleQubitOp {
    pub matrix: Matrix2<C64>,
    pub label: GateLabel,
}

impl SingleQubitOp {
    pub fn new(matrix: Matrix2<C64>, label: GateLabel) -> Self {
        SingleQubitOp { matrix, label }
    }

    pub fn identity() -> Self {
        Self::new(Matrix2::identity(), GateLabel::I)
    }

    /// Real Hadamard `(1/√2)[[1, 1], [1, −1]]`.
    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(Matrix2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)), GateLabel::H)
    }

    pub fn pauli_x() -> Self {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        Self::new(Matrix2::new(z, o, o, z), GateLabel::X)
    }

    pub fn pauli_z() -> Self {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        Self::new(Matrix2::new(o, z, z, -o), GateLabel::Z)
    }

    /// `σX·σZ`, with σZ acting first.
    pub fn pauli_xz() -> Self {
        Self::new(Self::pauli_x().matrix * Self::pauli_z().matrix, GateLabel::XZ)
    }

    /// Projector onto basis state `k` (0 or 1).
    pub fn projector(k: usize) -> Self {
        let mut m = Matrix2::zeros();
        m[(k, k)] = c(1.0, 0.0);
        Self::new(m, GateLabel::Custom)
    }

    pub fn apply(&self, v: &Pair) -> Pair {
        self.matrix * v
    }

    pub fn is_unitary(&self) -> bool {
        let d = self.matrix.adjoint() * self.matrix - Matrix2::identity();
        d.iter().all(|z| z.norm() <= ALGEBRA_TOL)
    }

    pub fn compose(&self, first: &SingleQubitOp) -> SingleQubitOp {
        Self::new(self.matrix * first.matrix, GateLabel::Custom)
    }
}

fn kron3(t: &Matrix2<C64>, p: &Matrix2<C64>, s: &Matrix2<C64>) -> Matrix8 {
    let tp = t.kronecker(p);
    let full = tp.kronecker(s);
    Matrix8::from_fn(|r, c| full[(r, c)])
}

/// Embeds one operator per degree of freedom into the workspace.
pub fn tensor3(op_t: &SingleQubitOp, op_p: &SingleQubitOp, op_s: &SingleQubitOp) -> WorkspaceOperator {
    WorkspaceOperator::new(kron3(&op_t.matrix, &op_p.matrix, &op_s.matrix))
}

/// Applies `target` to `target_dof` on the subspace where `control_dof`
/// equals `control_value`, and the identity elsewhere.
pub fn controlled_op(
    control_dof: Dof,
    control_value: usize,
    target_dof: Dof,
    target: &SingleQubitOp,
) -> Result<WorkspaceOperator, AlgebraError> {
    if control_dof == target_dof {
        return Err(AlgebraError::SameDof(control_dof));
    }
    let on = SingleQubitOp::projector(control_value & 1).matrix;
    let off = SingleQubitOp::projector(1 - (control_value & 1)).matrix;
    let id = Matrix2::identity();
    let mut factors_on = [id; 3];
    let mut factors_off = [id; 3];
    let pos = |d: Dof| match d {
        Dof::Transverse => 0,
        Dof::Path => 1,
        Dof::Polarization => 2,
    };
    factors_on[pos(control_dof)] = on;
    factors_on[pos(target_dof)] = target.matrix;
    factors_off[pos(control_dof)] = off;
    let m = kron3(&factors_on[0], &factors_on[1], &factors_on[2])
        + kron3(&factors_off[0], &factors_off[1], &factors_off[2]);
    Ok(WorkspaceOperator::new(m))
}

/// Embeds a single-DOF operator, identity on the other two.
pub fn embed(dof: Dof, op: &SingleQubitOp) -> WorkspaceOperator {
    let i = SingleQubitOp::identity();
    match dof {
        Dof::Transverse => tensor3(op, &i, &i),
        Dof::Path => tensor3(&i, op, &i),
        Dof::Polarization => tensor3(&i, &i, op),
    }
}

pub fn apply(op: &WorkspaceOperator, state: &Supermode) -> Supermode {
    Supermode { amp: op.matrix * state.amp }
}

/// Transverse amplitudes `(ψ+, ψ−)` on output port `(path, pol)`, unnormalized.
pub fn project_path_pol(state: &Supermode, path: Path, pol: Pol) -> Pair {
    Pair::new(state.amp(Transverse::Plus, path, pol), state.amp(Transverse::Minus, path, pol))
}

/// `|⟨a, b⟩|²` for two normalized vectors.
pub fn fidelity(a: &Pair, b: &Pair) -> Result<f64, AlgebraError> {
    for v in [a, b] {
        let n = v.norm();
        if n == 0.0 {
            return Err(AlgebraError::ZeroNorm);
        }
        if (n - 1.0).abs() > 1e-9 {
            return Err(AlgebraError::NotNormalized(n));
        }
    }
    Ok(a.dotc(b).norm_sqr().min(1.0))
}

/// Scales `v` to unit norm.
pub fn normalized(v: &Pair) -> Result<Pair, AlgebraError> {
    let n = v.norm();
    if n == 0.0 {
        return Err(AlgebraError::ZeroNorm);
    }
    Ok(v / C64::new(n, 0.0))
}

/// Elementwise distance between `a` and `b` after removing the best global phase.
pub fn phase_aligned_diff(a: &Pair, b: &Pair) -> f64 {
    let overlap = a.dotc(b);
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let aligned = b / phase;
    a.iter().zip(aligned.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
