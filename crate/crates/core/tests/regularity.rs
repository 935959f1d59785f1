mod common;

use common::*;
use conjlab::conjugacy::MapPath;
use conjlab::linalg::{dist, norm};
use conjlab::suite::random_pairs;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn jiang_moduli() {
    let p = shipped("jiang").problem;
    assert!((p.theta(1.0) - 1.221403).abs() < 1e-6);
    for t in [0.0, 1.0, 7.0] {
        assert_eq!(p.theta0(t), 0.2);
        assert!((p.lipschitz_factor_c(t) - (0.2 * t).exp()).abs() < 1e-12);
    }
    assert!((p.lipschitz_factor_c(2.0) - 1.49182).abs() < 1e-5);
    assert_eq!(p.theta(0.0), 1.0);
    assert_eq!(p.lipschitz_factor_c(0.0), 1.0);
}

#[test]
fn jiang_budget_closed_form() {
    let p = shipped("jiang").problem;
    let b = p.continuity_budget(0.1).unwrap();
    let l = (4.0 * std::f64::consts::PI / 5.0 / 0.1).ln();
    assert!((b.l - l).abs() < 1e-12);
    assert!((b.l - 3.2243).abs() < 2e-4);
    assert!((b.theta_star - 1.9057).abs() < 1e-4);
    assert!((b.delta - 0.02624).abs() < 1e-5);
    assert!(!b.clamped);
}

#[test]
fn budget_clamps_for_large_eps() {
    let p = shipped("jiang").problem;
    let eps = 4.0 * std::f64::consts::PI / 5.0;
    let b = p.continuity_budget(eps * 1.5).unwrap();
    assert!(b.clamped);
    assert_eq!((b.l, b.theta_star), (0.0, 1.0));
    assert_eq!(b.delta, eps * 1.5 / 2.0);
    assert!(p.continuity_budget(0.0).is_err());
}

#[test]
fn uniform_continuity_on_jiang() {
    let p = shipped("jiang").problem;
    let b = p.continuity_budget(0.1).unwrap();
    let pairs = random_pairs(1, 2.0, 64, 0.9 * b.delta, 0.9 * b.delta, 3);
    let es = p.check_uniform_continuity(0.1, &pairs, &[0.0, 1.0, b.l, 2.0 * b.l, 50.0]);
    assert!(es.iter().all(|e| e.pass), "{es:?}");
    // out-of-contract pairs are skipped, not failed
    let far = random_pairs(1, 2.0, 8, 1.1 * b.delta, 1.1 * b.delta, 4);
    let es = p.check_uniform_continuity(0.1, &far, &[1.0]);
    assert!(es.iter().all(|e| e.pass));
    assert!(es[0].note.as_deref().unwrap().contains("8 pairs outside"));
}

#[test]
fn zero_f_continuity_is_trivial() {
    let p = shipped("zero_f").problem;
    let pairs = random_pairs(2, 1.0, 16, 0.01, 0.04, 5);
    let es = p.check_uniform_continuity(0.1, &pairs, &[0.0, 3.0]);
    assert!(es.iter().all(|e| e.pass));
}

#[test]
fn jacobians_at_trivial_points() {
    let p = shipped("zero_f").problem;
    let j = p.jacobian_g(4.0, &[0.3, 0.1]).unwrap();
    assert!((j.j.clone() - DMatrix::identity(2, 2)).amax() <= 1e-8);
    assert!(
        (p.jacobian_h(4.0, &[0.3, 0.1]).unwrap() - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-8
    );
    let q = shipped("jiang").problem;
    assert_eq!(
        q.jacobian_g(0.0, &[0.4]).unwrap().j,
        DMatrix::identity(1, 1)
    );
}

#[test]
fn jiang_jacobian_against_golden_and_inverse() {
    let p = shipped("jiang").problem;
    let j = p.jacobian_g(2.0, &[0.4]).unwrap();
    assert!((j.j[(0, 0)] - golden("jiang", "jacobian_G.t=2,eta=0.4")[0]).abs() <= 1e-7);
    assert!(j.det_j > 0.0 && j.fd_relative() <= 1e-4);
    let g = p.g_map(2.0, &[0.4], MapPath::FlowComposition).unwrap();
    let prod = p.jacobian_h(2.0, &g).unwrap()[(0, 0)] * j.j[(0, 0)];
    assert!((prod - 1.0).abs() <= 1e-6);
}

#[test]
fn jacobian_checks_on_shipped_points() {
    for name in ["jiang", "s3_rot", "scaled_sin"] {
        let sc = shipped(name);
        assert!(sc.probes.jacobian.len() >= 16);
        let es = sc.problem.check_jacobians(&sc.probes.jacobian, 1e-4, 1e-6);
        assert!(es.iter().all(|e| e.pass), "{name}: {es:?}");
    }
}

#[test]
fn second_derivatives_commute_on_s3() {
    let p = shipped("s3_rot").problem;
    assert!(p.hessian_asymmetry(2.0, &[0.4, -0.3]).unwrap() <= 1e-4);
}

#[test]
fn properness() {
    let zero = shipped("zero_f").problem;
    let es = zero.properness_check(3.0, &[5.0], 8, 1, 1e-9);
    assert!((es[0].measured - 5.0).abs() <= 1e-7);
    let p = shipped("jiang").problem;
    let es = p.properness_check(3.0, &[5.0, 10.0, 50.0], 8, 1, 1e-7);
    assert!(es.iter().all(|e| e.pass && e.measured >= e.bound), "{es:?}");
    let vacuous = p.properness_check(3.0, &[0.5], 8, 1, 1e-7);
    assert!(vacuous[0].note.as_deref().unwrap().contains("vacuous"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn g_is_lipschitz_with_factor_c(a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..8.0) {
        let p = shipped("jiang").problem;
        let ga = p.g_map(t, &[a], MapPath::FlowComposition).unwrap();
        let gb = p.g_map(t, &[b], MapPath::FlowComposition).unwrap();
        prop_assert!(dist(&ga, &gb) <= p.lipschitz_factor_c(t) * (a - b).abs() + 1e-7);
    }

    #[test]
    fn jacobian_determinant_positive(x in -2.0f64..2.0, y in -2.0f64..2.0, t in 0.0f64..6.0) {
        let p = shipped("s3_rot").problem;
        let j = p.jacobian_g(t, &[x, y]).unwrap();
        prop_assert!(j.det_j > 0.0);
        prop_assert!(j.fd_relative() <= 1e-4);
    }

    #[test]
    fn g_grows_like_identity(r in 1.0f64..40.0, t in 0.0f64..5.0) {
        let p = shipped("jiang").problem;
        let g = p.g_map(t, &[r], MapPath::FlowComposition).unwrap();
        prop_assert!(norm(&g) >= r - p.proximity_bound() - 1e-7);
    }
}
