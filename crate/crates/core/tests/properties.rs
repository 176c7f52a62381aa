//! Invariants of the protocol and the renderer, as randomized properties.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinorbit::algebra::{apply, c, Pair, Supermode, C64};
use spinorbit::bench::parse_bench;
use spinorbit::elements::compile;
use spinorbit::par::Execution;
use spinorbit::render::{hg_orientation, render_transverse, render_transverse_with, BeamParams, GridSpec};
use spinorbit::teleport::{
    from_waveplates, run_compiled, run_many, run_protocol, sweep, waveplate_settings_for, PolarizationState,
    TELEPORT_BENCH, WAVEPLATE_TOL,
};
use spinorbit::verify::random_circuit;

const TOL: f64 = 1e-12;

fn polarization() -> impl Strategy<Value = PolarizationState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(a, b, cc, d)| a * a + b * b + cc * cc + d * d > 1e-3)
        .prop_map(|(a, b, cc, d)| PolarizationState::normalize(c(a, b), c(cc, d)).unwrap())
}

fn supermode() -> impl Strategy<Value = Supermode> {
    proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 8)
        .prop_map(|v| Supermode::from_slice(&v.into_iter().map(|(r, i)| c(r, i)).collect::<Vec<_>>()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn port_weights_sum_to_one(pol in polarization()) {
        let run = run_protocol(&pol).unwrap();
        let total: f64 = run.ports.iter().map(|p| p.weight).sum();
        prop_assert!((total - 1.0).abs() < TOL);
        for p in &run.ports {
            prop_assert!((p.weight - 0.25).abs() < TOL);
        }
    }

    #[test]
    fn every_stage_preserves_norm(pol in polarization()) {
        let run = run_protocol(&pol).unwrap();
        for s in [&run.psi_a, &run.psi_b, &run.psi_c, &run.psi_d] {
            prop_assert!((s.norm_sqr() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn corrections_restore_the_input(pol in polarization()) {
        let run = run_protocol(&pol).unwrap();
        for f in run.corrected_fidelity {
            prop_assert!((f - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn compiled_circuits_are_unitary(seed in any::<u64>(), s in supermode()) {
        let circuit = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed));
        let compiled = compile(&circuit).unwrap();
        prop_assert!(compiled.operator.is_unitary());
        let out = apply(&compiled.operator, &s);
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < TOL * s.norm_sqr().max(1.0));
    }

    #[test]
    fn bench_pipeline_matches_built_in(pol in polarization()) {
        let compiled = compile(&parse_bench(TELEPORT_BENCH).unwrap()).unwrap();
        let a = run_protocol(&pol).unwrap();
        let b = run_compiled(&pol, &compiled).unwrap();
        prop_assert!(a.psi_d.max_abs_diff(&b.psi_d) < TOL);
    }

    #[test]
    fn waveplates_invert_the_preparation(pol in polarization()) {
        let w = waveplate_settings_for(&pol).unwrap();
        prop_assert!(w.residual(&pol) <= WAVEPLATE_TOL);
        let back = from_waveplates(w.qwp.to_degrees(), w.hwp.to_degrees());
        let overlap = (back.alpha.conj() * pol.alpha + back.beta.conj() * pol.beta).norm();
        prop_assert!((overlap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bloch_vectors_are_unit(pol in polarization()) {
        let s = pol.bloch();
        prop_assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < TOL);
        let back = PolarizationState::from_bloch(s);
        let overlap = (back.alpha.conj() * pol.alpha + back.beta.conj() * pol.beta).norm();
        prop_assert!((overlap - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orientation_ignores_phase_and_scale(pol in polarization(), phase in 0.0..std::f64::consts::TAU, scale in 0.1..5.0f64) {
        let spec = GridSpec::new(96, 96, 4.0);
        let beam = BeamParams::default();
        let v = pol.as_pair();
        let w: Pair = v * (C64::from_polar(scale, phase));
        let a = hg_orientation(&render_transverse(&v, &beam, &spec).unwrap()).degrees();
        let b = hg_orientation(&render_transverse(&w, &beam, &spec).unwrap()).degrees();
        match (a, b) {
            (Some(x), Some(y)) => {
                let d = (x - y).rem_euclid(180.0);
                prop_assert!(d.min(180.0 - d) < 1e-6, "{x} vs {y}");
            }
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn rendering_is_execution_independent(pol in polarization()) {
        let spec = GridSpec::new(64, 48, 3.5);
        let beam = BeamParams::default();
        let grids: Vec<_> = Execution::all()
            .into_iter()
            .map(|e| render_transverse_with(&pol.as_pair(), &beam, &spec, e).unwrap())
            .collect();
        for g in &grids[1..] {
            prop_assert_eq!(&g.values, &grids[0].values);
        }
    }
}

#[test]
fn batch_runs_are_execution_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pols: Vec<_> = (0..200).map(|_| spinorbit::verify::random_polarization(&mut rng)).collect();
    let runs: Vec<Vec<_>> = Execution::all()
        .into_iter()
        .map(|e| run_many(&pols, e).into_iter().map(|r| r.unwrap().psi_d).collect())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r, &runs[0]);
    }
}

#[test]
fn sweep_is_closed_and_uniform() {
    for points in [3, 6, 12, 24] {
        let pts = sweep(points).unwrap();
        assert_eq!(pts.len(), points);
        let angle = |a: [f64; 3], b: [f64; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos();
        let step = std::f64::consts::FRAC_PI_2 / (points / 3) as f64;
        for k in 0..points {
            let next = pts[(k + 1) % points].bloch;
            assert!((angle(pts[k].bloch, next) - step).abs() < 1e-9, "points {points}, step {k}");
        }
    }
    assert!(sweep(0).is_err());
    assert!(sweep(10).is_err());
}
