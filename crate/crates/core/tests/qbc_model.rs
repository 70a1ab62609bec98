mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use qbchain::qbc::{
    analyze, apply_open, binding_analysis, concealing_defect, fidelity, partial_trace_a, trace_distance,
    DensityOperator, HilbertDims, OpenOperation, PureState, QbcScheme,
};
use qbchain::seed;

fn scheme(c0: PureState<f64>, c1: PureState<f64>) -> QbcScheme<f64> {
    QbcScheme::with_identity_open(c0, c1).unwrap()
}

#[test]
fn partial_trace_matches_index_summation() {
    let mut rng = seed::rng(1, "ptrace", 0);
    for (da, db) in [(3, 2), (2, 3), (4, 4), (1, 5)] {
        for _ in 0..50 {
            let psi = random_state(&mut rng, da, db);
            let oracle = partial_trace_oracle(psi.amplitudes().as_slice(), da, db);
            let rho = partial_trace_a(&psi).unwrap();
            for (b, row) in oracle.iter().enumerate() {
                for (bp, want) in row.iter().enumerate() {
                    assert!((rho.matrix()[(b, bp)] - want).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn partial_trace_is_linear_in_mixtures() {
    let mut rng = seed::rng(2, "linear", 0);
    let dims = HilbertDims::new(3, 2).unwrap();
    for _ in 0..200 {
        let (psi, phi) = (random_state(&mut rng, 3, 2), random_state(&mut rng, 3, 2));
        let alpha: f64 = rand::Rng::random(&mut rng);
        let mix = psi.projector() * C::new(alpha, 0.0) + phi.projector() * C::new(1.0 - alpha, 0.0);
        let lhs = DensityOperator::new(mix).unwrap().partial_trace_a(dims).unwrap();
        let rhs = partial_trace_a(&psi).unwrap().matrix() * C::new(alpha, 0.0)
            + partial_trace_a(&phi).unwrap().matrix() * C::new(1.0 - alpha, 0.0);
        assert!((lhs.matrix() - &rhs).norm() < 1e-12);
        let oracle = partial_trace_density_oracle(
            &(psi.projector() * C::new(alpha, 0.0) + phi.projector() * C::new(1.0 - alpha, 0.0)),
            3,
            2,
        );
        assert!((lhs.matrix() - oracle).norm() < 1e-12);
    }
}

#[test]
fn fuchs_van_de_graaf_on_random_pairs() {
    let mut rng = seed::rng(3, "fvdg", 0);
    for i in 0..1000 {
        let d = 2 + i % 3;
        let r = DensityOperator::new(random_density(&mut rng, d)).unwrap();
        let s = DensityOperator::new(random_density(&mut rng, d)).unwrap();
        let (dist, f) = (trace_distance(&r, &s).unwrap(), fidelity(&r, &s).unwrap());
        assert!(1.0 - f <= dist + 1e-9, "pair {i}: 1-F={} D={dist}", 1.0 - f);
        assert!(dist <= (1.0 - f * f).max(0.0).sqrt() + 1e-9, "pair {i}");
        assert!((dist - trace_distance_oracle(r.matrix(), s.matrix())).abs() < 1e-10);
        assert!((f - fidelity(&s, &r).unwrap()).abs() < 1e-9, "fidelity symmetric");
    }
}

#[test]
fn concealing_defect_composes_the_oracles() {
    let mut rng = seed::rng(4, "defect", 0);
    for _ in 0..200 {
        let (c0, c1) = (random_state(&mut rng, 2, 2), random_state(&mut rng, 2, 2));
        let r0 = partial_trace_oracle(c0.amplitudes().as_slice(), 2, 2);
        let r1 = partial_trace_oracle(c1.amplitudes().as_slice(), 2, 2);
        let to_m = |r: &Vec<Vec<C>>| DMatrix::from_fn(2, 2, |i, j| r[i][j]);
        let expected = trace_distance_oracle(&to_m(&r0), &to_m(&r1));
        assert!((concealing_defect(&scheme(c0, c1)) - expected).abs() < 1e-10);
    }
}

#[test]
fn closed_form_binding_matches_numerical_maximization() {
    let mut rng = seed::rng(5, "binding", 0);
    for i in 0..100 {
        let (c0, c1) = (random_state(&mut rng, 2, 2), random_state(&mut rng, 2, 2));
        let numerical = max_overlap_numerical(c0.amplitudes().as_slice(), c1.amplitudes().as_slice(), 2);
        let s = scheme(c0, c1);
        let b = binding_analysis(&s);
        assert!((b.strength - (1.0 - numerical)).abs() < 1e-6, "scheme {i}: {} vs {}", b.strength, 1.0 - numerical);
        // the closed form's unitary attains the value it reports
        let attained = s.c1().inner(&s.c0().apply_local_a(&b.optimal_unitary).unwrap()).norm();
        assert!((attained - b.max_overlap).abs() < 1e-9);
    }
}

#[test]
fn exactly_concealing_schemes_are_never_binding() {
    let mut rng = seed::rng(6, "no-go", 0);
    for i in 0..300 {
        let (da, db) = [(2, 2), (3, 2), (2, 3), (4, 2)][i % 4];
        let c0 = random_state(&mut rng, da, db);
        let c1 = c0.apply_local_a(&random_unitary(&mut rng, da)).unwrap();
        let Ok(s) = QbcScheme::with_identity_open(c0, c1) else {
            continue;
        };
        let a = analyze(&s);
        assert!(a.concealing_defect <= 1e-10, "{}", a.concealing_defect);
        assert!(a.binding_strength <= 1e-6, "{}", a.binding_strength);
        let u = binding_analysis(&s).witness(1e-6).cloned().expect("witness when not binding");
        assert!(s.c0().apply_local_a(&u).unwrap().equal_up_to_phase(s.c1(), 1e-6));
        assert!(a.no_go_consistent);
    }
}

#[test]
fn bell_and_product_examples() {
    let d = HilbertDims::new(2, 2).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amps = |v: [f64; 4]| v.iter().map(|&x| C::new(x, 0.0)).collect::<Vec<_>>();
    let bell =
        scheme(PureState::new(d, amps([r, 0.0, 0.0, r])).unwrap(), PureState::new(d, amps([0.0, r, r, 0.0])).unwrap());
    let a = analyze(&bell);
    assert!(a.concealing_defect.abs() < 1e-12 && a.binding_strength.abs() < 1e-12);
    let u = binding_analysis(&bell).witness(1e-6).cloned().unwrap();
    assert!(bell.c0().apply_local_a(&u).unwrap().equal_up_to_phase(bell.c1(), 1e-6));

    let product = scheme(PureState::basis(d, 0, 0).unwrap(), PureState::basis(d, 0, 1).unwrap());
    let a = analyze(&product);
    assert!((a.concealing_defect - 1.0).abs() < 1e-12 && (a.binding_strength - 1.0).abs() < 1e-12);
    assert!(a.cheating_unitary.is_none());
}

#[test]
fn depolarizing_open_is_rejected_as_indistinguishable() {
    let d = HilbertDims::new(2, 2).unwrap();
    let (c0, c1) = (PureState::basis(d, 0, 0).unwrap(), PureState::basis(d, 1, 1).unwrap());
    let dep = OpenOperation::depolarizing(4);
    let out = apply_open(&dep, &c0).unwrap();
    assert!((out.matrix() - DMatrix::identity(4, 4) * C::new(0.25, 0.0)).norm() < 1e-12);
    assert!(QbcScheme::new(c0, c1, dep).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_produced_operator_is_a_density_operator(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
        let mut rng = seed::rng(seed, "prop", 0);
        let psi = random_state(&mut rng, da, db);
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
        let rho = partial_trace_a(&psi).unwrap();
        let m = rho.matrix();
        prop_assert!((m - m.adjoint()).norm() < 1e-10);
        prop_assert!((m.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.eigenvalues().iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn defect_zero_implies_strength_zero(seed in any::<u64>()) {
        let mut rng = seed::rng(seed, "prop-no-go", 0);
        let c0 = random_state(&mut rng, 2, 2);
        let c1 = random_state(&mut rng, 2, 2);
        if let Ok(s) = QbcScheme::with_identity_open(c0, c1) {
            let a = analyze(&s);
            prop_assert!(a.no_go_consistent);
            prop_assert!(a.concealing_defect > 1e-10 || a.binding_strength <= 1e-6);
            prop_assert!((a.marginal_fidelity - (1.0 - a.binding_strength)).abs() < 1e-8);
        }
    }
}
