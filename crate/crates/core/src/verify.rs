//! Self-check suite behind `spinorbit verify`.
//!
//! Each check compares the simulator against an independent route: a
//! hand-expanded formula, a naive matrix product, or a round trip. The gate
//! set is injectable so that a deliberately broken gate can be shown to fail.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    apply, c, controlled_op, Dof, Matrix8, Pair, Path, Pol, Supermode, Transverse, WorkspaceOperator, ALGEBRA_TOL, C64,
};
use crate::bench::{parse_bench, serialize_bench};
use crate::elements::{beam_splitter_op, compile, dove_prism_op, jones_hwp, Circuit, Element, Placement};
use crate::render::{grid_inner, hg_orientation, render_transverse, BeamParams, GridSpec, GRID_TOL};
use crate::teleport::{
    extract_ports, poincare_sweep, prepare_input, run_compiled, run_protocol, waveplate_settings_for,
    PolarizationState, ENTANGLER_BENCH, TELEPORT_BENCH, WAVEPLATE_TOL,
};

/// Bound on `|⟨ψ+, ψ−⟩|` on a grid.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, max_error: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult { name: name.to_string(), passed: max_error <= tolerance, max_error, tolerance, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random inputs for the closed-form and fidelity checks.
    pub samples: usize,
    /// Random circuits for the round-trip and oracle checks.
    pub circuits: usize,
    pub grid: GridSpec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, samples: 1000, circuits: 100, grid: GridSpec::default() }
    }
}

/// The two gates the Bell analyzer is built from.
#[derive(Debug, Clone)]
pub struct Gates {
    pub beam_splitter: WorkspaceOperator,
    /// Half-wave plate at 45° on path 1.
    pub path_cnot: WorkspaceOperator,
}

impl Default for Gates {
    fn default() -> Self {
        Gates {
            beam_splitter: beam_splitter_op(),
            path_cnot: controlled_op(Dof::Path, 1, Dof::Polarization, &jones_hwp(PI / 4.0)).expect("distinct dofs"),
        }
    }
}

impl Gates {
    fn entangler(&self) -> WorkspaceOperator {
        dove_prism_op(Placement::Path1).expect("path-restricted").after(&self.beam_splitter)
    }

    fn bell(&self) -> WorkspaceOperator {
        self.beam_splitter.after(&self.path_cnot)
    }
}

pub fn random_polarization(rng: &mut impl Rng) -> PolarizationState {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if let Ok(p) = PolarizationState::normalize(c(v[0], v[1]), c(v[2], v[3])) {
            return p;
        }
    }
}

/// A random valid circuit. Plate angles sit on the 10⁻⁶-degree lattice that
/// the bench format prints exactly.
pub fn random_circuit(rng: &mut impl Rng) -> Circuit {
    let placement = |rng: &mut dyn rand::RngCore| match rng.random_range(0..3) {
        0 => Placement::BothPaths,
        1 => Placement::Path0,
        _ => Placement::Path1,
    };
    let angle = |rng: &mut dyn rand::RngCore| crate::bench::degrees_to_angle(rng.random_range(0..180_000_000u64) as f64 / 1e6);
    let mut elements = Vec::new();
    if rng.random_bool(0.3) {
        elements.push(Element::prepare());
    }
    for _ in 0..rng.random_range(1..=8) {
        let e = match rng.random_range(0..4) {
            0 => Element::bs(),
            1 => Element::dove(if rng.random_bool(0.5) { Placement::Path0 } else { Placement::Path1 }),
            2 => Element::hwp(angle(rng), placement(rng)),
            _ => Element::qwp(angle(rng), placement(rng)),
        };
        elements.push(e);
    }
    if rng.random_bool(0.4) {
        elements.push(Element::pbs());
    }
    for e in &mut elements {
        if rng.random_bool(0.25) {
            e.label = format!("E{}", rng.random_range(0..1000));
        }
    }
    let circuit = Circuit::new(elements).expect("generator emits valid circuits");
    if rng.random_bool(0.3) {
        circuit.with_name(format!("random-{}", rng.random_range(0..10_000)))
    } else {
        circuit
    }
}

/// Plain triple-loop product over arrays, independent of the matrix library.
pub fn naive_product(circuit: &Circuit) -> Matrix8 {
    let mut acc = [[C64::new(0.0, 0.0); 8]; 8];
    for (i, row) in acc.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    for e in circuit.elements() {
        let Some(op) = e.operator() else { continue };
        let m = op.matrix();
        let mut next = [[C64::new(0.0, 0.0); 8]; 8];
        for (i, row) in next.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for (k, acc_row) in acc.iter().enumerate() {
                    *cell += m[(i, k)] * acc_row[j];
                }
            }
        }
        acc = next;
    }
    Matrix8::from_fn(|i, j| acc[i][j])
}

/// The four path-polarization Bell combinations and the product modes they
/// must map to, as `(description, input, output)`.
pub fn bell_table() -> Vec<(&'static str, Supermode, Supermode)> {
    let b = |p: Path, s: Pol| Supermode::basis(Transverse::Plus, p, s);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let combo = |a: Supermode, sign: f64, other: Supermode| a.add(&other.scale(c(sign, 0.0))).scale(c(s, 0.0));
    vec![
        ("(χ0 ê_H + χ1 ê_V)/√2 → χ0 ê_H", combo(b(Path::P0, Pol::H), 1.0, b(Path::P1, Pol::V)), b(Path::P0, Pol::H)),
        ("(χ0 ê_H − χ1 ê_V)/√2 → χ1 ê_H", combo(b(Path::P0, Pol::H), -1.0, b(Path::P1, Pol::V)), b(Path::P1, Pol::H)),
        ("(χ0 ê_V + χ1 ê_H)/√2 → χ0 ê_V", combo(b(Path::P0, Pol::V), 1.0, b(Path::P1, Pol::H)), b(Path::P0, Pol::V)),
        ("(χ0 ê_V − χ1 ê_H)/√2 → χ1 ê_V", combo(b(Path::P0, Pol::V), -1.0, b(Path::P1, Pol::H)), b(Path::P1, Pol::V)),
    ]
}

/// Elementwise distance between `out` and `expected` after removing one global phase.
pub fn phase_free_distance(out: &Supermode, expected: &Supermode) -> f64 {
    let overlap = expected.as_vector().dotc(out.as_vector());
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    out.max_abs_diff(&expected.scale(phase))
}

pub fn check_bell_table(gates: &Gates) -> CheckResult {
    let op = gates.bell();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (k, (desc, input, expected)) in bell_table().into_iter().enumerate() {
        let err = phase_free_distance(&apply(&op, &input), &expected);
        worst = worst.max(err);
        if !(err <= ALGEBRA_TOL) {
            failed.push(format!("line {}: {desc} (error {err:.2e})", k + 1));
        }
    }
    let detail = if failed.is_empty() { "all four lines hold".to_string() } else { failed.join("; ") };
    CheckResult::new("bell-table", worst, ALGEBRA_TOL, detail)
}

/// Output ports written out by hand from the stage formulas, ½ included:
/// 0H: (α, β), 0V: (β, α), 1H: (α, −β), 1V: (β, −α).
pub fn closed_form_ports(pol: &PolarizationState) -> [Pair; 4] {
    let (a, b) = (pol.alpha * 0.5, pol.beta * 0.5);
    [Pair::new(a, b), Pair::new(b, a), Pair::new(a, -b), Pair::new(b, -a)]
}

fn inputs(cfg: &VerifyConfig) -> Vec<PolarizationState> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.samples).map(|_| random_polarization(&mut rng)).collect()
}

pub fn check_closed_form(gates: &Gates, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let pipeline = gates.bell().after(&gates.entangler());
    let (mut comp, mut weight) = (0.0f64, 0.0f64);
    for pol in inputs(cfg) {
        let d = apply(&pipeline, &prepare_input(&pol).expect("normalized"));
        let ports = extract_ports(&d);
        for (port, expected) in ports.iter().zip(closed_form_ports(&pol)) {
            comp = comp.max((port.transverse - expected).iter().map(|z| z.norm()).fold(0.0, f64::max));
            weight = weight.max((port.weight - 0.25).abs());
        }
    }
    vec![
        CheckResult::new("closed-form-ports", comp, ALGEBRA_TOL, format!("{} random inputs", cfg.samples)),
        CheckResult::new("port-weights", weight, ALGEBRA_TOL, "each port carries 1/4"),
    ]
}

pub fn check_fidelity(cfg: &VerifyConfig) -> CheckResult {
    let mut worst = 0.0f64;
    for pol in inputs(cfg) {
        let run = run_protocol(&pol).expect("normalized input");
        for f in run.corrected_fidelity {
            worst = worst.max((f - 1.0).abs());
        }
        worst = worst.max((run.uncorrected_fidelity[0] - 1.0).abs());
    }
    CheckResult::new("teleport-fidelity", worst, ALGEBRA_TOL, "corrected on all ports, uncorrected on 0H")
}

pub fn check_grid(spec: &GridSpec) -> Vec<CheckResult> {
    let beam = BeamParams::default();
    let plus = render_transverse(&Pair::new(c(1.0, 0.0), c(0.0, 0.0)), &beam, spec);
    let minus = render_transverse(&Pair::new(c(0.0, 0.0), c(1.0, 0.0)), &beam, spec);
    let (Ok(plus), Ok(minus)) = (plus, minus) else {
        return vec![CheckResult::new("grid-orthogonality", f64::INFINITY, ORTHOGONALITY_TOL, "invalid grid")];
    };
    let cross = grid_inner(&plus, &minus).expect("same grid").norm();
    let np = (grid_inner(&plus, &plus).expect("same grid").re - 1.0).abs();
    let nm = (grid_inner(&minus, &minus).expect("same grid").re - 1.0).abs();
    let size = format!("{}x{}, extent {}", spec.nx, spec.ny, spec.extent);
    vec![
        CheckResult::new("grid-orthogonality", cross, ORTHOGONALITY_TOL, format!("|<+,->| on {size}")),
        CheckResult::new("grid-normalization", np.max(nm), GRID_TOL, format!("|<±,±> - 1| on {size}")),
    ]
}

pub fn check_orientations(spec: &GridSpec) -> CheckResult {
    let run = run_protocol(&PolarizationState::left_circular()).expect("normalized");
    let expected = [-45.0, 45.0, 45.0, -45.0];
    let mut worst = 0.0f64;
    let mut found = Vec::new();
    for (port, want) in run.ports.iter().zip(expected) {
        let got = render_transverse(&port.transverse, &BeamParams::default(), spec)
            .ok()
            .and_then(|g| hg_orientation(&g).degrees());
        match got {
            Some(deg) => {
                worst = worst.max((deg - want).abs());
                found.push(format!("{}: {deg:.3}°", port.port));
            }
            None => {
                worst = f64::INFINITY;
                found.push(format!("{}: undefined", port.port));
            }
        }
    }
    CheckResult::new("circular-orientations", worst, 1.0, found.join(", "))
}

pub fn check_parser(cfg: &VerifyConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut failures = Vec::new();
    let mut total = 0;
    for text in [TELEPORT_BENCH, ENTANGLER_BENCH] {
        total += 1;
        match parse_bench(text) {
            Ok(c) => {
                let once = serialize_bench(&c);
                if parse_bench(&once).as_ref() != Ok(&c) || serialize_bench(&parse_bench(&once).unwrap()) != once {
                    failures.push(format!("built-in {:?}", c.name));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    for k in 0..cfg.circuits {
        total += 1;
        let circuit = random_circuit(&mut rng);
        if parse_bench(&serialize_bench(&circuit)).as_ref() != Ok(&circuit) {
            failures.push(format!("generated #{k}"));
        }
    }
    let detail = if failures.is_empty() { format!("{total} circuits round-trip") } else { failures.join("; ") };
    CheckResult::new("parser-round-trip", failures.len() as f64, 0.0, detail)
}

pub fn check_parser_coherence(cfg: &VerifyConfig) -> CheckResult {
    let compiled = match parse_bench(TELEPORT_BENCH).map_err(|e| e.to_string()).and_then(|c| compile(&c).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return CheckResult::new("parser-protocol-coherence", f64::INFINITY, ALGEBRA_TOL, e),
    };
    let mut worst = 0.0f64;
    for pol in inputs(cfg).iter().take(100) {
        let built_in = run_protocol(pol).expect("normalized");
        let parsed = run_compiled(pol, &compiled).expect("normalized");
        worst = worst.max(built_in.psi_d.max_abs_diff(&parsed.psi_d));
    }
    CheckResult::new("parser-protocol-coherence", worst, ALGEBRA_TOL, "teleport.bench vs built-in stages")
}

pub fn check_oracle(cfg: &VerifyConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0a11);
    let mut worst = 0.0f64;
    for _ in 0..cfg.circuits {
        let circuit = random_circuit(&mut rng);
        let compiled = compile(&circuit).expect("valid circuit");
        let naive = naive_product(&circuit);
        let err = compiled.operator.matrix().iter().zip(naive.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    CheckResult::new("oracle-equivalence", worst, ALGEBRA_TOL, format!("{} random circuits", cfg.circuits))
}

pub fn check_sweep() -> CheckResult {
    let pts = poincare_sweep();
    let angle = |a: [f64; 3], b: [f64; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos();
    let mut worst = 0.0f64;
    for k in 0..pts.len() {
        worst = worst.max((angle(pts[k].bloch, pts[(k + 1) % pts.len()].bloch) - PI / 8.0).abs());
    }
    let anchors_ok = pts.len() == 12
        && pts[0].state == PolarizationState::horizontal()
        && pts[4].state == PolarizationState::diagonal()
        && pts[8].state == PolarizationState::left_circular();
    if !anchors_ok {
        worst = f64::INFINITY;
    }
    CheckResult::new("sweep-closure", worst, 1e-9, "12 points, equal 22.5° steps, anchors at 1, 5, 9")
}

pub fn check_waveplates() -> CheckResult {
    let mut worst = 0.0f64;
    for p in &poincare_sweep() {
        worst = worst.max(waveplate_settings_for(&p.state).map_or(f64::INFINITY, |w| w.residual(&p.state)));
    }
    CheckResult::new("waveplate-inversion", worst, WAVEPLATE_TOL, "forward Jones model reproduces every sweep point")
}

/// Runs every check in a fixed order.
pub fn run_all(cfg: &VerifyConfig, gates: &Gates) -> Vec<CheckResult> {
    let mut out = vec![check_bell_table(gates)];
    out.extend(check_closed_form(gates, cfg));
    out.push(check_fidelity(cfg));
    out.extend(check_grid(&cfg.grid));
    out.push(check_orientations(&cfg.grid));
    out.push(check_parser(cfg));
    out.push(check_parser_coherence(cfg));
    out.push(check_oracle(cfg));
    out.push(check_sweep());
    out.push(check_waveplates());
    out
}

/// Fixed-width pass/fail table.
pub fn format_table(results: &[CheckResult]) -> String {
    let mut out = format!("{:<28} {:<6} {:>12} {:>10}  {}\n", "check", "result", "max error", "tolerance", "detail");
    for r in results {
        out.push_str(&format!(
            "{:<28} {:<6} {:>12.3e} {:>10.1e}  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.max_error,
            r.tolerance,
            r.detail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;
    use crate::algebra::{embed, GateLabel, SingleQubitOp};

    fn quick() -> VerifyConfig {
        VerifyConfig { seed: 7, samples: 50, circuits: 20, grid: GridSpec::new(128, 128, 4.0) }
    }

    #[test]
    fn clean_gates_pass_everything() {
        let results = run_all(&quick(), &Gates::default());
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn tampered_hadamard_names_the_broken_lines() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bad = SingleQubitOp::new(Matrix2::new(c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)), GateLabel::Custom);
        let gates = Gates { beam_splitter: embed(Dof::Path, &bad), ..Gates::default() };
        let r = check_bell_table(&gates);
        assert!(!r.passed);
        assert!(r.detail.contains("line 1"), "{}", r.detail);
        assert!(r.detail.contains("(χ0 ê_H + χ1 ê_V)/√2 → χ0 ê_H"));
    }

    #[test]
    fn same_seed_same_table() {
        let a = format_table(&run_all(&quick(), &Gates::default()));
        let b = format_table(&run_all(&quick(), &Gates::default()));
        assert_eq!(a, b);
    }
}
