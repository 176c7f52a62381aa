//! Ideal optical elements and their compilation into workspace operators.
//!
//! Path-restricted elements become operators controlled by the path degree
//! of freedom. The polarizing beam splitter is not a workspace operator: it
//! marks the terminal four-port projection stage (see
//! [`crate::algebra::project_path_pol`]).

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::algebra::{
    apply, c, controlled_op, embed, Dof, GateLabel, SingleQubitOp, Supermode, WorkspaceOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    BothPaths,
    Path0,
    Path1,
}

impl Placement {
    fn path_index(self) -> Option<usize> {
        match self {
            Placement::BothPaths => None,
            Placement::Path0 => Some(0),
            Placement::Path1 => Some(1),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::BothPaths => "both paths",
            Placement::Path0 => "path 0",
            Placement::Path1 => "path 1",
        })
    }
}

/// Wave-plate angles are radians in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementKind {
    BeamSplitter,
    HalfWavePlate(f64),
    QuarterWavePlate(f64),
    DovePrism,
    PolarizingBeamSplitter,
    /// Holographic mask producing ψ+ on path 0. The simulated input already
    /// starts in that mode, so it compiles to the identity.
    MaskPrepare,
}

impl ElementKind {
    pub fn name(&self) -> &'static str {
        match self {
            ElementKind::BeamSplitter => "beam splitter",
            ElementKind::HalfWavePlate(_) => "half-wave plate",
            ElementKind::QuarterWavePlate(_) => "quarter-wave plate",
            ElementKind::DovePrism => "Dove prism",
            ElementKind::PolarizingBeamSplitter => "polarizing beam splitter",
            ElementKind::MaskPrepare => "mode-preparation mask",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub placement: Placement,
    pub label: String,
}

impl Element {
    pub fn new(kind: ElementKind, placement: Placement) -> Self {
        Element { kind, placement, label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn bs() -> Self {
        Self::new(ElementKind::BeamSplitter, Placement::BothPaths)
    }

    pub fn pbs() -> Self {
        Self::new(ElementKind::PolarizingBeamSplitter, Placement::BothPaths)
    }

    pub fn dove(placement: Placement) -> Self {
        Self::new(ElementKind::DovePrism, placement)
    }

    /// Half-wave plate at `theta` radians; the angle is reduced into `[0, π)`.
    pub fn hwp(theta: f64, placement: Placement) -> Self {
        Self::new(ElementKind::HalfWavePlate(reduce_angle(theta)), placement)
    }

    pub fn qwp(theta: f64, placement: Placement) -> Self {
        Self::new(ElementKind::QuarterWavePlate(reduce_angle(theta)), placement)
    }

    pub fn prepare() -> Self {
        Self::new(ElementKind::MaskPrepare, Placement::Path0)
    }

    fn check_placement(&self) -> Result<(), &'static str> {
        match (self.kind, self.placement) {
            (ElementKind::BeamSplitter | ElementKind::PolarizingBeamSplitter, p) if p != Placement::BothPaths => {
                Err("acts on both paths and cannot be restricted to one")
            }
            (ElementKind::DovePrism, Placement::BothPaths) => Err("must be placed on a single path"),
            (ElementKind::MaskPrepare, p) if p != Placement::Path0 => Err("only prepares the beam on path 0"),
            (ElementKind::HalfWavePlate(t) | ElementKind::QuarterWavePlate(t), _) if !(0.0..PI).contains(&t) => {
                Err("angle must lie in [0, π)")
            }
            _ => Ok(()),
        }
    }

    /// Workspace operator for this element. `None` for the polarizing beam splitter.
    pub fn operator(&self) -> Option<WorkspaceOperator> {
        let single = match self.kind {
            ElementKind::BeamSplitter => return Some(beam_splitter_op()),
            ElementKind::PolarizingBeamSplitter => return None,
            ElementKind::MaskPrepare => return Some(WorkspaceOperator::identity()),
            ElementKind::DovePrism => {
                return Some(transverse_flip(self.placement.path_index().unwrap_or(1)));
            }
            ElementKind::HalfWavePlate(t) => jones_hwp(t),
            ElementKind::QuarterWavePlate(t) => jones_qwp(t),
        };
        Some(match self.placement.path_index() {
            None => embed(Dof::Polarization, &single),
            Some(p) => controlled_op(Dof::Path, p, Dof::Polarization, &single).expect("path controls polarization"),
        })
    }
}

/// Reduces an angle in radians into `[0, π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Half-wave plate with fast axis at `theta`: `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`.
/// Equals σX at 45° and σZ at 0°.
pub fn jones_hwp(theta: f64) -> SingleQubitOp {
    // Quadrant settings come out exact (σX at 45°, not cos(π/2) ≈ 6e-17).
    let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (s2, c2) = (snap(s2), snap(c2));
    SingleQubitOp::new(Matrix2::new(c(c2, 0.0), c(s2, 0.0), c(s2, 0.0), c(-c2, 0.0)), GateLabel::Hwp(theta))
}

/// Quarter-wave plate with fast axis at `theta`, retardance `diag(1, −i)`
/// in the plate frame. At 45° it takes ê_H to `(1, i)/√2` up to phase.
pub fn jones_qwp(theta: f64) -> SingleQubitOp {
    let (s, co) = theta.sin_cos();
    let off = c(s * co, s * co);
    SingleQubitOp::new(
        Matrix2::new(c(co * co, -s * s), off, off, c(s * s, -co * co)),
        GateLabel::Qwp(theta),
    )
}

/// 50/50 beam splitter as the real Hadamard on the path.
pub fn beam_splitter_op() -> WorkspaceOperator {
    embed(Dof::Path, &SingleQubitOp::hadamard())
}

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("circuit has no elements")]
    Empty,
    #[error("element {index} ({kind}) {reason}")]
    InvalidPlacement { index: usize, kind: &'static str, reason: &'static str },
    #[error("element {index}: polarizing beam splitter must be the last element")]
    PbsNotTerminal { index: usize },
}

/// Ideal Dove prism on one path: ψ+ ↔ ψ− controlled by that path.
pub fn dove_prism_op(placement: Placement) -> Result<WorkspaceOperator, CircuitError> {
    match placement.path_index() {
        Some(p) => Ok(transverse_flip(p)),
        None => Err(CircuitError::InvalidPlacement {
            index: 0,
            kind: ElementKind::DovePrism.name(),
            reason: "must be placed on a single path",
        }),
    }
}

fn transverse_flip(path: usize) -> WorkspaceOperator {
    controlled_op(Dof::Path, path, Dof::Transverse, &SingleQubitOp::pauli_x()).expect("distinct dofs")
}

/// Ordered optical-table layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    elements: Vec<Element>,
    pub name: Option<String>,
    /// Where the circuit came from, e.g. a file path. Not serialized.
    pub source: Option<String>,
}

impl Circuit {
    pub fn new(elements: Vec<Element>) -> Result<Self, CircuitError> {
        validate(&elements)?;
        Ok(Circuit { elements, name: None, source: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn has_terminal_pbs(&self) -> bool {
        matches!(self.elements.last(), Some(e) if e.kind == ElementKind::PolarizingBeamSplitter)
    }
}

/// Checks placement rules and PBS position; errors name the element index.
pub fn validate(elements: &[Element]) -> Result<(), CircuitError> {
    if elements.is_empty() {
        return Err(CircuitError::Empty);
    }
    for (index, e) in elements.iter().enumerate() {
        e.check_placement()
            .map_err(|reason| CircuitError::InvalidPlacement { index, kind: e.kind.name(), reason })?;
        if e.kind == ElementKind::PolarizingBeamSplitter && index + 1 != elements.len() {
            return Err(CircuitError::PbsNotTerminal { index });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub operator: WorkspaceOperator,
    /// A polarizing beam splitter follows the unitary part.
    pub terminal_pbs: bool,
}

impl Compiled {
    pub fn run(&self, state: &Supermode) -> Supermode {
        apply(&self.operator, state)
    }
}

/// Composes element operators in order, each left-multiplying the running product.
pub fn compile(circuit: &Circuit) -> Result<Compiled, CircuitError> {
    validate(&circuit.elements)?;
    let mut operator = WorkspaceOperator::identity();
    for e in &circuit.elements {
        if let Some(op) = e.operator() {
            operator = op.after(&operator);
        }
    }
    Ok(Compiled { operator, terminal_pbs: circuit.has_terminal_pbs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Matrix8, Pair, Path, Pol, Transverse, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn equal_up_to_phase(a: &Matrix2<C64>, b: &Matrix2<C64>, tol: f64) -> bool {
        let (i, j) = (0..4).map(|k| (k / 2, k % 2)).max_by(|x, y| b[*x].norm().total_cmp(&b[*y].norm())).unwrap();
        let ph = a[(i, j)] / b[(i, j)];
        (ph.norm() - 1.0).abs() < tol && a.iter().zip(b.iter()).all(|(x, y)| (x - y * ph).norm() < tol)
    }

    #[test]
    fn hwp_calibration() {
        let x = jones_hwp(PI / 4.0);
        assert_eq!(x.matrix, SingleQubitOp::pauli_x().matrix);
        let z = jones_hwp(0.0);
        let h = z.apply(&Pair::new(c(1.0, 0.0), c(0.0, 0.0)));
        assert!(equal_up_to_phase(&Matrix2::new(h[0], c(0.0, 0.0), h[1], c(0.0, 0.0)), &Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)), 1e-15));
    }

    #[test]
    fn hwp_squares_to_identity_and_has_half_turn_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let t = rng.random_range(0.0..PI);
            let m = jones_hwp(t);
            assert!(m.is_unitary());
            let sq = m.matrix * m.matrix;
            assert!(equal_up_to_phase(&sq, &Matrix2::identity(), 1e-14));
            assert!(equal_up_to_phase(&jones_hwp(t + PI / 2.0).matrix, &m.matrix, 1e-14));
        }
    }

    #[test]
    fn qwp_calibration() {
        let h = Pair::new(c(1.0, 0.0), c(0.0, 0.0));
        let out = jones_qwp(PI / 4.0).apply(&h);
        let target = Pair::new(c(S, 0.0), c(0.0, S));
        assert!(crate::algebra::phase_aligned_diff(&target, &out) < 1e-15);
        let out0 = jones_qwp(0.0).apply(&h);
        assert!(crate::algebra::phase_aligned_diff(&h, &out0) < 1e-15);
    }

    #[test]
    fn qwp_fourth_power_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let t = rng.random_range(0.0..PI);
            let m = jones_qwp(t);
            let d = m.matrix.adjoint() * m.matrix - Matrix2::identity();
            assert!(d.iter().all(|z| z.norm() < 1e-15));
            let p4 = m.matrix * m.matrix * m.matrix * m.matrix;
            assert!(equal_up_to_phase(&p4, &Matrix2::identity(), 1e-14));
        }
    }

    #[test]
    fn beam_splitter_rows() {
        let bs = beam_splitter_op();
        let in0 = Supermode::basis(Transverse::Plus, Path::P0, Pol::H);
        let in1 = Supermode::basis(Transverse::Plus, Path::P1, Pol::H);
        let out0 = apply(&bs, &in0);
        let out1 = apply(&bs, &in1);
        assert!(out0.max_abs_diff(&in0.add(&in1).scale(c(S, 0.0))) < 1e-15);
        assert!(out1.max_abs_diff(&in0.add(&in1.scale(c(-1.0, 0.0))).scale(c(S, 0.0))) < 1e-15);
        assert!(bs.after(&bs).max_abs_diff(&WorkspaceOperator::identity()) < 1e-15);
    }

    #[test]
    fn dove_prism_action() {
        let dp = dove_prism_op(Placement::Path1).unwrap();
        let out = apply(&dp, &Supermode::basis(Transverse::Plus, Path::P1, Pol::V));
        assert_eq!(out, Supermode::basis(Transverse::Minus, Path::P1, Pol::V));
        let fixed = Supermode::basis(Transverse::Plus, Path::P0, Pol::V);
        assert_eq!(apply(&dp, &fixed), fixed);
        assert!(dove_prism_op(Placement::BothPaths).is_err());
    }

    #[test]
    fn dove_prism_is_the_path1_permutation() {
        // Oracle: swap (t, p=1, s) with (1-t, p=1, s), fix everything else.
        let oracle = Matrix8::from_fn(|r, col| {
            let image = if (col / 2) % 2 == 1 { col ^ 4 } else { col };
            if r == image {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert_eq!(dove_prism_op(Placement::Path1).unwrap().matrix(), &oracle);
    }

    #[test]
    fn compile_single_bs() {
        let circuit = Circuit::new(vec![Element::bs()]).unwrap();
        let compiled = compile(&circuit).unwrap();
        assert_eq!(compiled.operator, beam_splitter_op());
        assert!(!compiled.terminal_pbs);
    }

    #[test]
    fn compile_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let circuit = Circuit::new(vec![
            Element::prepare(),
            Element::qwp(0.3, Placement::BothPaths),
            Element::bs(),
            Element::dove(Placement::Path1),
            Element::hwp(PI / 4.0, Placement::Path1),
            Element::qwp(1.1, Placement::Path0),
            Element::bs(),
            Element::pbs(),
        ])
        .unwrap();
        let compiled = compile(&circuit).unwrap();
        assert!(compiled.terminal_pbs);
        assert!(compiled.operator.is_unitary());
        for _ in 0..100 {
            let v: Vec<C64> = (0..8).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let s = Supermode::from_slice(&v).unwrap();
            let mut seq = s.clone();
            for e in circuit.elements() {
                if let Some(op) = e.operator() {
                    seq = apply(&op, &seq);
                }
            }
            assert!(compiled.run(&s).max_abs_diff(&seq) < 1e-12);
        }
    }

    #[test]
    fn placement_and_order_errors_carry_index() {
        assert_eq!(Circuit::new(vec![]).unwrap_err(), CircuitError::Empty);
        let bad_bs = Element::new(ElementKind::BeamSplitter, Placement::Path1);
        assert!(matches!(
            Circuit::new(vec![Element::prepare(), bad_bs]),
            Err(CircuitError::InvalidPlacement { index: 1, .. })
        ));
        assert!(matches!(
            Circuit::new(vec![Element::dove(Placement::BothPaths)]),
            Err(CircuitError::InvalidPlacement { index: 0, .. })
        ));
        assert_eq!(
            Circuit::new(vec![Element::bs(), Element::pbs(), Element::bs()]).unwrap_err(),
            CircuitError::PbsNotTerminal { index: 1 }
        );
    }

    #[test]
    fn angles_are_reduced() {
        let e = Element::hwp(-PI / 4.0, Placement::BothPaths);
        assert_eq!(e.kind, ElementKind::HalfWavePlate(reduce_angle(-PI / 4.0)));
        assert!((reduce_angle(-PI / 4.0) - 3.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(reduce_angle(PI), 0.0);
    }

    #[test]
    fn element_operators_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let t = rng.random_range(0.0..PI);
            for p in [Placement::BothPaths, Placement::Path0, Placement::Path1] {
                assert!(Element::hwp(t, p).operator().unwrap().is_unitary());
                assert!(Element::qwp(t, p).operator().unwrap().is_unitary());
            }
        }
        assert!(Element::pbs().operator().is_none());
    }
}
