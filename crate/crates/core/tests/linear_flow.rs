mod common;

use common::*;
use conjlab::linalg::{max_abs_diff, op_norm};
use conjlab::linear::{CoefficientMatrix, LinearSystem, ScalarFn};
use conjlab::ode::IntegratorConfig;
use nalgebra::DMatrix;
use proptest::prelude::*;

// M is taken as max(1, α) since the constructor requires α ≤ M
fn scalar(alpha: f64) -> LinearSystem {
    LinearSystem::new(CoefficientMatrix::scalar(-1.0), alpha.max(1.0), 1.0, alpha).unwrap()
}

#[test]
fn scalar_transition_is_exponential() {
    let cfg = IntegratorConfig::default();
    let phi = scalar(1.0).transition(2.0, 0.0, &cfg).unwrap();
    assert!((phi[(0, 0)] - (-2f64).exp()).abs() <= 1e-10);
    // backward in time too
    let back = scalar(1.0).transition(0.0, 2.0, &cfg).unwrap();
    assert!((back[(0, 0)] - 2f64.exp()).abs() <= 1e-8 * 2f64.exp());
}

#[test]
fn equal_times_give_identity_exactly() {
    let sys = shipped("s3_rot").problem.linear;
    let phi = sys
        .transition(4.2, 4.2, &IntegratorConfig::default())
        .unwrap();
    assert_eq!(phi, DMatrix::identity(2, 2));
}

#[test]
fn s3_transition_matches_cocycle_oracle() {
    let sys = shipped("s3_rot").problem.linear;
    let cfg = IntegratorConfig::default();
    let phi = sys.transition(3.0, 1.0, &cfg).unwrap();
    let golden = golden("s3_rot", "phi_cocycle.t=3,s=1");
    assert!(
        max_abs(
            phi.as_slice(),
            &[golden[0], golden[2], golden[1], golden[3]]
        ) <= 1e-9
    );
    let prod = sys.transition(3.0, 2.0, &cfg).unwrap() * sys.transition(2.0, 1.0, &cfg).unwrap();
    assert!(max_abs_diff(&phi, &prod) <= 1e-9);
}

#[test]
fn uas_certificate_checks() {
    let cfg = IntegratorConfig::default();
    let e = scalar(1.0).verify_uas(&[(1.0, 0.0), (5.0, 2.0)], &cfg, 1e-9);
    assert!(e.pass, "{e:?}");
    assert!(e.measured <= 1e-9);
    // claimed α = 2 is wrong: e⁻¹ > e⁻²
    let e = scalar(2.0).verify_uas(&[(1.0, 0.0)], &cfg, 1e-9);
    assert!(!e.pass);
    assert!((e.measured - ((-1f64).exp() - (-2f64).exp())).abs() < 1e-8);
}

#[test]
fn s3_uas_over_fifty_pairs() {
    let sys = shipped("s3_rot").problem.linear;
    let pairs: Vec<(f64, f64)> = (0..10)
        .flat_map(|i| (0..5).map(move |j| (i as f64 + 1.25 * j as f64, i as f64)))
        .collect();
    let e = sys.verify_uas(&pairs, &IntegratorConfig::default(), 1e-9);
    assert!(e.pass, "{e:?}");
}

#[test]
fn bound_certificate_rejects_small_m() {
    let sys = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 0.5, 1.0, 0.5);
    assert!(sys.is_err() || !sys.unwrap().verify_bound(&[0.0, 1.0], 1e-12).pass);
    assert!(LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 2.0).is_err());
}

#[test]
fn det_and_cocycle_entries_pass_on_shipped_systems() {
    let cfg = IntegratorConfig::default();
    for name in ["jiang", "s3_rot", "zero_f"] {
        let sys = shipped(name).problem.linear;
        assert!(
            sys.verify_det(&[(2.0, 0.0), (0.0, 3.0)], &cfg).pass,
            "{name}"
        );
        assert!(
            sys.verify_cocycle(&[(3.0, 1.5, 0.0), (0.0, 2.0, 4.0)], &cfg, 1e-8)
                .pass,
            "{name}"
        );
    }
}

#[test]
fn oscillating_diagonal_transition() {
    // a(t) = −1 + 0.5 sin t, Φ(t,0) = exp(−t + 0.5(1 − cos t))
    let a = CoefficientMatrix::Diagonal(vec![ScalarFn::Osc {
        mean: -1.0,
        amp: 0.5,
        freq: 1.0,
    }]);
    let sys = LinearSystem::new(a, 1.5, 1.0_f64.exp(), 0.5).unwrap();
    let cfg = IntegratorConfig::default();
    for t in [0.5f64, 2.0, 7.0] {
        let want = (-t + 0.5 * (1.0 - t.cos())).exp();
        let got = sys.transition(t, 0.0, &cfg).unwrap()[(0, 0)];
        assert!((got - want).abs() <= 1e-9, "t = {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn s3_cocycle(s in 0.0f64..5.0, d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
        let sys = shipped("s3_rot").problem.linear;
        let cfg = IntegratorConfig::default();
        let (r, t) = (s + d1, s + d1 + d2);
        let lhs = sys.transition(t, s, &cfg).unwrap();
        let rhs = sys.transition(t, r, &cfg).unwrap() * sys.transition(r, s, &cfg).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-8);
    }

    #[test]
    fn s3_transition_obeys_bound(s in 0.0f64..10.0, d in 0.0f64..10.0) {
        let p = &shipped("s3_rot").problem;
        let phi = p.linear.transition(s + d, s, &p.cfg).unwrap();
        prop_assert!(op_norm(&phi) <= (-d).exp() + 1e-9);
        let oracle = s3_transition(s + d, s);
        prop_assert!((phi[(0, 1)] - oracle[0][1]).abs() <= 1e-8);
    }

    #[test]
    fn linear_flow_is_transition_times_state(x in -2.0f64..2.0, y in -2.0f64..2.0, t in 0.0f64..6.0) {
        let p = &shipped("s3_rot").problem;
        let phi = p.linear.transition(t, 0.0, &p.cfg).unwrap();
        let flow = p.linear.flow(t, 0.0, &[x, y], &p.cfg).unwrap();
        let want = &phi * nalgebra::DVector::from_vec(vec![x, y]);
        prop_assert!(max_abs(&flow, want.as_slice()) <= 1e-8);
    }
}
