//! Polarization-to-transverse-mode transfer through the path degree of freedom.
//!
//! The beam starts as `ψ+ χ0 (α ê_H + β ê_V)`. A beam splitter and a Dove
//! prism on path 1 entangle path with transverse mode; a half-wave plate at
//! 45° on path 1 and a second beam splitter turn the path-polarization Bell
//! basis into the product basis; a polarizing beam splitter on each path then
//! leaves four output ports, each carrying `(α, β)` in the `(ψ+, ψ−)` basis up
//! to a fixed Pauli correction.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use thiserror::Error;

use crate::algebra::{
    apply, c, controlled_op, fidelity, normalized, phase_aligned_diff, project_path_pol, AlgebraError, Dof,
    Pair, Path, Pol, SingleQubitOp, Supermode, Transverse, WorkspaceOperator, C64,
};
use crate::elements::{beam_splitter_op, dove_prism_op, jones_hwp, jones_qwp, reduce_angle, Placement};
use crate::par::{self, Execution};

/// Bench description of the full protocol.
pub const TELEPORT_BENCH: &str = include_str!("../data/teleport.bench");
/// Bench description of the path-transverse entangler alone.
pub const ENTANGLER_BENCH: &str = include_str!("../data/entangler.bench");

/// Normalization tolerance for input polarizations.
pub const NORM_TOL: f64 = 1e-12;
/// Forward-model tolerance for recovered wave-plate settings.
pub const WAVEPLATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TeleportError {
    #[error("polarization is not normalized: |α|² + |β|² = {0}")]
    NotNormalized(f64),
    #[error("port {0} carries no weight")]
    ZeroWeight(PortLabel),
    #[error("wave-plate search did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("sweep needs a positive multiple of 3 points (got {0})")]
    SweepPoints(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `α ê_H + β ê_V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    pub alpha: C64,
    pub beta: C64,
}

impl PolarizationState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self, TeleportError> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !((n - 1.0).abs() <= NORM_TOL) {
            return Err(TeleportError::NotNormalized(n));
        }
        Ok(PolarizationState { alpha, beta })
    }

    /// Scales `(α, β)` to unit norm.
    pub fn normalize(alpha: C64, beta: C64) -> Result<Self, TeleportError> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(TeleportError::Algebra(AlgebraError::ZeroNorm));
        }
        Ok(PolarizationState { alpha: alpha / n, beta: beta / n })
    }

    pub fn horizontal() -> Self {
        PolarizationState { alpha: c(1.0, 0.0), beta: c(0.0, 0.0) }
    }

    pub fn vertical() -> Self {
        PolarizationState { alpha: c(0.0, 0.0), beta: c(1.0, 0.0) }
    }

    pub fn diagonal() -> Self {
        PolarizationState { alpha: c(FRAC_1_SQRT_2, 0.0), beta: c(FRAC_1_SQRT_2, 0.0) }
    }

    pub fn antidiagonal() -> Self {
        PolarizationState { alpha: c(FRAC_1_SQRT_2, 0.0), beta: c(-FRAC_1_SQRT_2, 0.0) }
    }

    /// `(1, i)/√2`.
    pub fn left_circular() -> Self {
        PolarizationState { alpha: c(FRAC_1_SQRT_2, 0.0), beta: c(0.0, FRAC_1_SQRT_2) }
    }

    pub fn right_circular() -> Self {
        PolarizationState { alpha: c(FRAC_1_SQRT_2, 0.0), beta: c(0.0, -FRAC_1_SQRT_2) }
    }

    /// One of `h v d a l r`.
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "h" => Self::horizontal(),
            "v" => Self::vertical(),
            "d" => Self::diagonal(),
            "a" => Self::antidiagonal(),
            "l" => Self::left_circular(),
            "r" => Self::right_circular(),
            _ => return None,
        })
    }

    pub fn as_pair(&self) -> Pair {
        Pair::new(self.alpha, self.beta)
    }

    /// Normalized Stokes vector `(S1, S2, S3)`; H, D and L map to the three axes.
    pub fn bloch(&self) -> [f64; 3] {
        let cross = self.alpha.conj() * self.beta;
        [self.alpha.norm_sqr() - self.beta.norm_sqr(), 2.0 * cross.re, 2.0 * cross.im]
    }

    /// Inverse of [`bloch`](Self::bloch), with α real and non-negative.
    pub fn from_bloch(s: [f64; 3]) -> Self {
        let polar = s[0].clamp(-1.0, 1.0).acos();
        let azimuth = s[2].atan2(s[1]);
        PolarizationState { alpha: c((polar / 2.0).cos(), 0.0), beta: C64::from_polar((polar / 2.0).sin(), azimuth) }
    }
}

/// Input supermode `ψ+ χ0 (α ê_H + β ê_V)`.
pub fn prepare_input(pol: &PolarizationState) -> Result<Supermode, TeleportError> {
    let pol = PolarizationState::new(pol.alpha, pol.beta)?;
    let mut s = Supermode::zero();
    s.set(Transverse::Plus, Path::P0, Pol::H, pol.alpha);
    s.set(Transverse::Plus, Path::P0, Pol::V, pol.beta);
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolWarning {
    /// The entangler expects all of the beam on path 0.
    Path1Support(f64),
}

impl fmt::Display for ProtocolWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolWarning::Path1Support(w) => {
                write!(f, "input carries weight {w:.3e} on path 1; the entangler assumes a path-0 input")
            }
        }
    }
}

pub fn entangler_op() -> WorkspaceOperator {
    dove_prism_op(Placement::Path1).expect("path-restricted").after(&beam_splitter_op())
}

/// Half-wave plate at 45° on path 1 (CNOT path → polarization), then the beam splitter.
pub fn bell_analyzer_op() -> WorkspaceOperator {
    let cnot = controlled_op(Dof::Path, 1, Dof::Polarization, &jones_hwp(PI / 4.0)).expect("distinct dofs");
    beam_splitter_op().after(&cnot)
}

/// Beam splitter, then Dove prism on path 1.
pub fn entangle(state: &Supermode) -> (Supermode, Option<ProtocolWarning>) {
    let stray = state.path_weight(Path::P1);
    let warning = (stray > 1e-12 * state.norm_sqr().max(f64::MIN_POSITIVE)).then_some(ProtocolWarning::Path1Support(stray));
    (apply(&entangler_op(), state), warning)
}

pub fn bell_analyze(state: &Supermode) -> Supermode {
    apply(&bell_analyzer_op(), state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PortLabel {
    pub path: Path,
    pub pol: Pol,
}

impl PortLabel {
    pub const ALL: [PortLabel; 4] = [
        PortLabel { path: Path::P0, pol: Pol::H },
        PortLabel { path: Path::P0, pol: Pol::V },
        PortLabel { path: Path::P1, pol: Pol::H },
        PortLabel { path: Path::P1, pol: Pol::V },
    ];

    pub fn correction(&self) -> Correction {
        match (self.path, self.pol) {
            (Path::P0, Pol::H) => Correction::I,
            (Path::P0, Pol::V) => Correction::X,
            (Path::P1, Pol::H) => Correction::Z,
            (Path::P1, Pol::V) => Correction::XZ,
        }
    }
}

impl fmt::Display for PortLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.path.index(), self.pol)
    }
}

/// Pauli correction restoring a port's output to the input state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    I,
    X,
    Z,
    /// σX σZ, σZ applied first.
    XZ,
}

impl Correction {
    pub fn op(self) -> SingleQubitOp {
        match self {
            Correction::I => SingleQubitOp::identity(),
            Correction::X => SingleQubitOp::pauli_x(),
            Correction::Z => SingleQubitOp::pauli_z(),
            Correction::XZ => SingleQubitOp::pauli_xz(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Correction::I => "I",
            Correction::X => "X",
            Correction::Z => "Z",
            Correction::XZ => "XZ",
        }
    }
}

/// One Bell-analyzer output. `transverse` keeps the overall ½ of the output
/// supermode, so `weight` is the share of the input power on this port.
#[derive(Debug, Clone, PartialEq)]
pub struct PortOutput {
    pub port: PortLabel,
    pub transverse: Pair,
    pub weight: f64,
    pub correction: Correction,
}

impl PortOutput {
    pub fn normalized(&self) -> Option<Pair> {
        normalized(&self.transverse).ok()
    }
}

/// Projects onto the four `(path, polarization)` ports: 0H, 0V, 1H, 1V.
pub fn extract_ports(state: &Supermode) -> [PortOutput; 4] {
    PortLabel::ALL.map(|port| {
        let transverse = project_path_pol(state, port.path, port.pol);
        PortOutput { port, transverse, weight: transverse.norm_squared(), correction: port.correction() }
    })
}

/// Corrected, normalized transverse vector of a port.
pub fn apply_correction(port: &PortOutput) -> Result<Pair, TeleportError> {
    let v = normalized(&port.transverse).map_err(|_| TeleportError::ZeroWeight(port.port))?;
    Ok(port.correction.op().apply(&v))
}

/// Every stage of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub input: PolarizationState,
    pub psi_a: Supermode,
    pub psi_b: Supermode,
    pub psi_c: Supermode,
    pub psi_d: Supermode,
    pub ports: [PortOutput; 4],
    /// Port vectors after their Pauli correction.
    pub corrected: [Pair; 4],
    pub corrected_fidelity: [f64; 4],
    pub uncorrected_fidelity: [f64; 4],
    pub warnings: Vec<ProtocolWarning>,
}

pub fn run_protocol(pol: &PolarizationState) -> Result<ProtocolRun, TeleportError> {
    let psi_a = prepare_input(pol)?;
    let (psi_b, warning) = entangle(&psi_a);
    let cnot = controlled_op(Dof::Path, 1, Dof::Polarization, &jones_hwp(PI / 4.0))?;
    let psi_c = apply(&cnot, &psi_b);
    let psi_d = apply(&beam_splitter_op(), &psi_c);
    finish(pol, psi_a, psi_b, psi_c, psi_d, warning.into_iter().collect())
}

/// Runs a compiled circuit on the prepared input in place of the built-in stages.
/// Only `psi_a` and `psi_d` are meaningful in the result.
pub fn run_compiled(pol: &PolarizationState, circuit: &crate::elements::Compiled) -> Result<ProtocolRun, TeleportError> {
    let psi_a = prepare_input(pol)?;
    let psi_d = circuit.run(&psi_a);
    finish(pol, psi_a.clone(), psi_a.clone(), psi_a, psi_d, Vec::new())
}

fn finish(
    pol: &PolarizationState,
    psi_a: Supermode,
    psi_b: Supermode,
    psi_c: Supermode,
    psi_d: Supermode,
    warnings: Vec<ProtocolWarning>,
) -> Result<ProtocolRun, TeleportError> {
    let ports = extract_ports(&psi_d);
    let input = pol.as_pair();
    let mut corrected = [Pair::zeros(); 4];
    let mut corrected_fidelity = [0.0; 4];
    let mut uncorrected_fidelity = [0.0; 4];
    for (k, port) in ports.iter().enumerate() {
        corrected[k] = apply_correction(port)?;
        corrected_fidelity[k] = fidelity(&corrected[k], &input)?;
        uncorrected_fidelity[k] = fidelity(&port.normalized().expect("weight checked"), &input)?;
    }
    Ok(ProtocolRun {
        input: *pol,
        psi_a,
        psi_b,
        psi_c,
        psi_d,
        ports,
        corrected,
        corrected_fidelity,
        uncorrected_fidelity,
        warnings,
    })
}

/// Runs the protocol for many inputs, in input order.
pub fn run_many(pols: &[PolarizationState], exec: Execution) -> Vec<Result<ProtocolRun, TeleportError>> {
    par::map(pols, exec, run_protocol)
}

/// One input of the polarization sweep, numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub state: PolarizationState,
    pub bloch: [f64; 3],
}

/// The default closed twelve-point sweep H → D → L → H.
pub fn poincare_sweep() -> Vec<SweepPoint> {
    sweep(12).expect("12 is a multiple of 3")
}

/// Closed sweep through H, D and L with `points / 3` uniform great-circle
/// steps on each leg. `points = 3` gives the anchors alone.
pub fn sweep(points: usize) -> Result<Vec<SweepPoint>, TeleportError> {
    if points == 0 || !points.is_multiple_of(3) {
        return Err(TeleportError::SweepPoints(points));
    }
    let per_leg = points / 3;
    let anchors = [
        PolarizationState::horizontal(),
        PolarizationState::diagonal(),
        PolarizationState::left_circular(),
    ];
    let mut out = Vec::with_capacity(points);
    for leg in 0..3 {
        let a = anchors[leg].bloch();
        let b = anchors[(leg + 1) % 3].bloch();
        for step in 0..per_leg {
            let state = if step == 0 {
                anchors[leg]
            } else {
                PolarizationState::from_bloch(slerp(a, b, step as f64 / per_leg as f64))
            };
            out.push(SweepPoint { index: out.len() + 1, state, bloch: state.bloch() });
        }
    }
    Ok(out)
}

fn slerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    let omega = dot.acos();
    let (wa, wb) = ((1.0 - t) * omega, t * omega);
    let s = omega.sin();
    std::array::from_fn(|k| (wa.sin() * a[k] + wb.sin() * b[k]) / s)
}

/// Plate angles (radians, in `[0, π)`) such that the quarter-wave plate
/// after the half-wave plate turns ê_H into the target polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSettings {
    pub qwp: f64,
    pub hwp: f64,
}

impl WaveplateSettings {
    /// `QWP(qwp) · HWP(hwp) · ê_H`.
    pub fn forward(&self) -> Pair {
        let h = Pair::new(c(1.0, 0.0), c(0.0, 0.0));
        jones_qwp(self.qwp).apply(&jones_hwp(self.hwp).apply(&h))
    }

    pub fn residual(&self, target: &PolarizationState) -> f64 {
        phase_aligned_diff(&target.as_pair(), &self.forward())
    }
}

/// Inverts the two-plate preparation. The ellipse axis fixes the quarter-wave
/// plate; the half-wave plate sets the linear polarization entering it.
pub fn waveplate_settings_for(pol: &PolarizationState) -> Result<WaveplateSettings, TeleportError> {
    let pol = PolarizationState::new(pol.alpha, pol.beta)?;
    let s = pol.bloch();
    let axis = 0.5 * s[1].atan2(s[0]);
    let ellipticity = 0.5 * s[2].clamp(-1.0, 1.0).asin();
    let candidates = [axis + ellipticity, axis - ellipticity].map(|linear| WaveplateSettings {
        qwp: reduce_angle(axis),
        hwp: reduce_angle(0.5 * linear),
    });
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.residual(&pol).total_cmp(&b.residual(&pol)))
        .expect("two candidates");
    if best.residual(&pol) <= WAVEPLATE_TOL {
        return Ok(best);
    }
    numeric_waveplate_search(&pol)
}

/// Grid scan over `[0, π)²` followed by a shrinking pattern search.
fn numeric_waveplate_search(pol: &PolarizationState) -> Result<WaveplateSettings, TeleportError> {
    let cost = |q: f64, h: f64| WaveplateSettings { qwp: reduce_angle(q), hwp: reduce_angle(h) }.residual(pol);
    const N: usize = 90;
    let step0 = PI / N as f64;
    let (mut q, mut h, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..N {
        for j in 0..N {
            let (qi, hj) = (i as f64 * step0, j as f64 * step0);
            let r = cost(qi, hj);
            if r < best {
                (q, h, best) = (qi, hj, r);
            }
        }
    }
    let mut step = step0;
    while step > 1e-15 && best > WAVEPLATE_TOL * 1e-3 {
        let mut improved = false;
        for (dq, dh) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let r = cost(q + dq, h + dh);
            if r < best {
                (q, h, best) = (q + dq, h + dh, r);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if best <= WAVEPLATE_TOL {
        Ok(WaveplateSettings { qwp: reduce_angle(q), hwp: reduce_angle(h) })
    } else {
        Err(TeleportError::NoConvergence(best))
    }
}

/// Polarization reached from ê_H by the plate pair, angles in degrees.
pub fn from_waveplates(qwp_deg: f64, hwp_deg: f64) -> PolarizationState {
    let v = WaveplateSettings { qwp: qwp_deg.to_radians(), hwp: hwp_deg.to_radians() }.forward();
    PolarizationState { alpha: v[0], beta: v[1] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ALGEBRA_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: f64 = FRAC_1_SQRT_2;

    fn random_pol(rng: &mut ChaCha8Rng) -> PolarizationState {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        PolarizationState::normalize(c(v[0], v[1]), c(v[2], v[3])).unwrap()
    }

    fn basis(t: Transverse, p: Path, s: Pol) -> Supermode {
        Supermode::basis(t, p, s)
    }

    #[test]
    fn prepare_basis_and_circular() {
        let s = prepare_input(&PolarizationState::horizontal()).unwrap();
        assert_eq!(s, basis(Transverse::Plus, Path::P0, Pol::H));
        let l = prepare_input(&PolarizationState::left_circular()).unwrap();
        assert_eq!(l.amp(Transverse::Plus, Path::P0, Pol::V), c(0.0, S));
        assert!((l.norm() - 1.0).abs() < 1e-15);
        let bad = PolarizationState { alpha: c(1.0, 0.0), beta: c(1.0, 0.0) };
        assert!(matches!(prepare_input(&bad), Err(TeleportError::NotNormalized(_))));
    }

    #[test]
    fn entangle_horizontal_input() {
        let (b, warning) = entangle(&prepare_input(&PolarizationState::horizontal()).unwrap());
        assert!(warning.is_none());
        let expected = basis(Transverse::Plus, Path::P0, Pol::H)
            .add(&basis(Transverse::Minus, Path::P1, Pol::H))
            .scale(c(S, 0.0));
        assert!(b.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn entangle_matches_element_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let bs = beam_splitter_op();
        let dp = dove_prism_op(Placement::Path1).unwrap();
        for _ in 0..20 {
            let a = prepare_input(&random_pol(&mut rng)).unwrap();
            let (b, _) = entangle(&a);
            assert!((b.norm() - 1.0).abs() < ALGEBRA_TOL);
            assert!(b.max_abs_diff(&apply(&dp, &apply(&bs, &a))) < 1e-15);
        }
    }

    #[test]
    fn entangle_warns_on_path1_input() {
        let (_, warning) = entangle(&basis(Transverse::Plus, Path::P1, Pol::H));
        assert!(matches!(warning, Some(ProtocolWarning::Path1Support(w)) if (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn bell_analyzer_on_bell_combinations() {
        let plus = Transverse::Plus;
        let bell = |p0: Pol, p1: Pol, sign: f64| {
            basis(plus, Path::P0, p0).add(&basis(plus, Path::P1, p1).scale(c(sign, 0.0))).scale(c(S, 0.0))
        };
        let out = bell_analyze(&bell(Pol::H, Pol::V, 1.0));
        assert!(out.max_abs_diff(&basis(plus, Path::P0, Pol::H)) < 1e-15);
        let out = bell_analyze(&bell(Pol::V, Pol::H, -1.0));
        assert!(out.max_abs_diff(&basis(plus, Path::P1, Pol::V)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let v: Vec<C64> = (0..8).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let s = Supermode::from_slice(&v).unwrap();
        assert!((bell_analyze(&s).norm() - s.norm()).abs() < ALGEBRA_TOL);
    }

    #[test]
    fn horizontal_input_ports() {
        let run = run_protocol(&PolarizationState::horizontal()).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (0.0, -1.0)];
        for (port, (p, m)) in run.ports.iter().zip(expect) {
            assert!((port.transverse - Pair::new(c(0.5 * p, 0.0), c(0.5 * m, 0.0))).norm() < 1e-15, "{}", port.port);
            assert!((port.weight - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn circular_input_ports() {
        let run = run_protocol(&PolarizationState::left_circular()).unwrap();
        let expect = [
            Pair::new(c(S, 0.0), c(0.0, S)),
            Pair::new(c(0.0, S), c(S, 0.0)),
            Pair::new(c(S, 0.0), c(0.0, -S)),
            Pair::new(c(0.0, S), c(-S, 0.0)),
        ];
        for (port, e) in run.ports.iter().zip(expect) {
            assert!((port.normalized().unwrap() - e).norm() < 1e-15, "{}", port.port);
        }
    }

    #[test]
    fn corrections_restore_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let pol = random_pol(&mut rng);
            let run = run_protocol(&pol).unwrap();
            for k in 0..4 {
                assert!((run.corrected_fidelity[k] - 1.0).abs() < ALGEBRA_TOL);
                assert!((run.ports[k].weight - 0.25).abs() < ALGEBRA_TOL);
            }
            assert!((run.uncorrected_fidelity[0] - 1.0).abs() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn port_0v_swap() {
        let port = PortOutput {
            port: PortLabel::ALL[1],
            transverse: Pair::new(c(0.3, 0.0), c(0.4, 0.0)),
            weight: 0.25,
            correction: Correction::X,
        };
        let v = apply_correction(&port).unwrap();
        assert!((v - Pair::new(c(0.8, 0.0), c(0.6, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn zero_weight_port_is_an_error() {
        let port = PortOutput { port: PortLabel::ALL[2], transverse: Pair::zeros(), weight: 0.0, correction: Correction::Z };
        assert_eq!(apply_correction(&port), Err(TeleportError::ZeroWeight(PortLabel::ALL[2])));
    }

    #[test]
    fn sweep_anchors_and_spacing() {
        let pts = poincare_sweep();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[0].state, PolarizationState::horizontal());
        assert_eq!(pts[4].state, PolarizationState::diagonal());
        assert_eq!(pts[8].state, PolarizationState::left_circular());
        let angle = |a: [f64; 3], b: [f64; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos();
        for k in 0..12 {
            let next = pts[(k + 1) % 12].bloch;
            assert!((angle(pts[k].bloch, next) - PI / 8.0).abs() < 1e-9, "step {k}");
        }
        for p in &pts {
            assert!((p.state.alpha.norm_sqr() + p.state.beta.norm_sqr() - 1.0).abs() < 1e-12);
        }
        let anchors = sweep(3).unwrap();
        assert_eq!(anchors.iter().map(|p| p.state).collect::<Vec<_>>(), vec![pts[0].state, pts[4].state, pts[8].state]);
        assert_eq!(sweep(10), Err(TeleportError::SweepPoints(10)));
    }

    #[test]
    fn waveplates_for_presets_and_sweep() {
        let h = waveplate_settings_for(&PolarizationState::horizontal()).unwrap();
        assert!(h.residual(&PolarizationState::horizontal()) < WAVEPLATE_TOL);
        let zero = WaveplateSettings { qwp: 0.0, hwp: 0.0 };
        assert!(zero.residual(&PolarizationState::horizontal()) < 1e-15);
        for name in ["h", "v", "d", "a", "l", "r"] {
            let pol = PolarizationState::preset(name).unwrap();
            let w = waveplate_settings_for(&pol).unwrap();
            assert!(w.residual(&pol) < WAVEPLATE_TOL, "{name}");
            assert!((0.0..PI).contains(&w.qwp) && (0.0..PI).contains(&w.hwp));
        }
        for p in poincare_sweep() {
            assert!(waveplate_settings_for(&p.state).unwrap().residual(&p.state) < WAVEPLATE_TOL);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let pol = random_pol(&mut rng);
            assert!(waveplate_settings_for(&pol).unwrap().residual(&pol) < WAVEPLATE_TOL);
        }
    }

    #[test]
    fn numeric_search_converges() {
        let pol = PolarizationState::normalize(c(0.3, 0.2), c(-0.5, 0.7)).unwrap();
        let w = numeric_waveplate_search(&pol).unwrap();
        assert!(w.residual(&pol) < WAVEPLATE_TOL);
    }

    #[test]
    fn bloch_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..50 {
            let pol = random_pol(&mut rng);
            let back = PolarizationState::from_bloch(pol.bloch());
            assert!(phase_aligned_diff(&pol.as_pair(), &back.as_pair()) < 1e-12);
        }
    }

    #[test]
    fn strategies_agree_on_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let pols: Vec<_> = (0..64).map(|_| random_pol(&mut rng)).collect();
        let runs: Vec<Vec<_>> = Execution::all()
            .into_iter()
            .map(|e| run_many(&pols, e).into_iter().map(|r| r.unwrap().psi_d).collect())
            .collect();
        for r in &runs[1..] {
            assert_eq!(r, &runs[0]);
        }
    }
}
