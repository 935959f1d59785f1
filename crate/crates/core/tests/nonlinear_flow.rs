mod common;

use std::sync::Arc;

use common::*;
use conjlab::linear::{CoefficientMatrix, LinearSystem};
use conjlab::nonlinear::{Builtin, ConjugacyProblem, FnField, Perturbation};
use conjlab::ode::IntegratorConfig;
use conjlab::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn scalar_problem(b: Builtin, gamma: f64, mu: f64) -> ConjugacyProblem {
    let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
    let pert = Perturbation::builtin(b, gamma, mu, 2).unwrap();
    ConjugacyProblem::new(lin, pert, IntegratorConfig::default(), 50.0).unwrap()
}

#[test]
fn contraction_hypothesis_is_enforced() {
    let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
    let pert = Perturbation::builtin(Builtin::ScaledSin(2.0), 2.0, 2.0, 2).unwrap();
    match ConjugacyProblem::new(lin, pert, IntegratorConfig::default(), 50.0) {
        Err(Error::CertificateRejected { inequality, .. }) => {
            assert!(inequality.contains("Kγ/α < 1"))
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn zero_perturbation_reduces_to_linear_flow() {
    let p = shipped("zero_f").problem;
    let eta = [0.4, -1.1];
    for t in [0.0, 1.0, 3.5] {
        let (y, _) = p.flow_y(t, 0.5, &eta).unwrap();
        let lin = p.linear.flow(t, 0.5, &eta, &p.cfg).unwrap();
        assert!(max_abs(&y, &lin) <= 1e-9);
        let v = p.variational_y(t, 0.5, &eta).unwrap();
        let phi = p.linear.transition(t, 0.5, &p.cfg).unwrap();
        assert!((v - phi).amax() <= 1e-9);
    }
}

#[test]
fn variational_is_identity_at_equal_times() {
    let p = shipped("jiang").problem;
    assert_eq!(
        p.variational_y(1.3, 1.3, &[0.7]).unwrap(),
        DMatrix::identity(1, 1)
    );
}

#[test]
fn origin_stays_put_when_f_vanishes_there() {
    let p = shipped("scaled_sin").problem;
    for t in [0.5, 5.0, 20.0] {
        assert!(p.flow_y(t, 0.0, &[0.0]).unwrap().0[0].abs() <= 1e-12);
    }
}

#[test]
fn jiang_flow_matches_rk4() {
    let p = shipped("jiang").problem;
    let y = p.flow_y(5.0, 0.0, &[0.0]).unwrap().0[0];
    assert!((y - rk4(jiang_rhs, 0.0, &[0.0], 5.0, RK4_H)[0]).abs() <= 1e-7);
}

#[test]
fn jiang_variational_matches_finite_differences() {
    let p = shipped("jiang").problem;
    let v = p.variational_y(2.0, 0.0, &[0.3]).unwrap()[(0, 0)];
    let h = 1e-5;
    let fd = (p.flow_y(2.0, 0.0, &[0.3 + h]).unwrap().0[0]
        - p.flow_y(2.0, 0.0, &[0.3 - h]).unwrap().0[0])
        / (2.0 * h);
    assert!(((v - fd) / v).abs() <= 1e-4, "{v} vs {fd}");
    let oracle = rk4(jiang_variational, 0.0, &[0.3, 1.0], 2.0, RK4_H)[1];
    assert!((v - oracle).abs() <= 1e-7);
}

#[test]
fn certificate_sampling_passes_and_catches_lies() {
    let p = shipped("jiang").problem;
    let ok = p.pert.verify(1, 50.0, 4.0, 256, 7, 1e-12, 1e-4);
    assert!(ok.iter().all(|e| e.pass), "{ok:?}");
    // claimed μ far too small
    let liar = Perturbation::builtin(Builtin::JiangArctan(0.2), 0.2, 0.05, 1).unwrap();
    let bad = liar.verify(1, 50.0, 4.0, 256, 7, 1e-12, 1e-4);
    assert!(bad.iter().any(|e| !e.pass));
}

#[test]
fn translated_field_vanishes_at_origin() {
    let p = scalar_problem(Builtin::ScaledSin(0.2), 0.2, 0.2);
    let shifted = p.pert.translated(&[0.4]);
    // g(t,u) = f(t,u+ȳ) − f(t,ȳ)
    for t in [0.0, 1.0, 9.0] {
        assert!(shifted.value(t, &[0.0])[0].abs() <= 1e-15);
        let want = 0.2 * (1.4f64.sin() - 0.4f64.sin());
        assert!((shifted.value(t, &[1.0])[0] - want).abs() <= 1e-15);
    }
}

#[test]
fn custom_field_with_fd_jacobian() {
    let field = FnField::new("half tanh", |_t, y, out| {
        for (o, v) in out.iter_mut().zip(y) {
            *o = 0.5 * v.tanh();
        }
    });
    let pert = Perturbation::new(Arc::new(field), 0.5, 0.5, 1).unwrap();
    assert!(!pert.has_analytic_jacobian());
    let j = pert.jacobian(0.0, &[0.3]).unwrap()[(0, 0)];
    assert!((j - 0.5 / 0.3f64.cosh().powi(2)).abs() <= 1e-6);
}

#[test]
fn gronwall_and_chain_hold_on_jiang() {
    let p = shipped("jiang").problem;
    let pairs = vec![(vec![0.2], vec![0.25]), (vec![-1.0], vec![1.0])];
    assert!(
        p.verify_gronwall(3.0, &pairs, &[0.0, 1.0, 2.0, 4.0], 1e-6)
            .pass
    );
    assert!(p.verify_chain(0.0, &[0.5], &[1.0, 2.5], 4.0, 1e-7).pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_chain_property(eta in -2.0f64..2.0, r in 0.0f64..4.0, t in 0.0f64..4.0) {
        let p = shipped("jiang").problem;
        let direct = p.flow_y(t, 0.0, &[eta]).unwrap().0;
        let mid = p.flow_y(r, 0.0, &[eta]).unwrap().0;
        let via = p.flow_y(t, r, &mid).unwrap().0;
        prop_assert!(max_abs(&direct, &via) <= 1e-7);
    }

    #[test]
    fn gronwall_estimate(a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..6.0) {
        // |y(t,0,a) − y(t,0,b)| ≤ K e^{(Kγ−α)t}|a − b|
        let p = shipped("jiang").problem;
        let ya = p.flow_y(t, 0.0, &[a]).unwrap().0[0];
        let yb = p.flow_y(t, 0.0, &[b]).unwrap().0[0];
        prop_assert!((ya - yb).abs() <= (-0.8 * t).exp() * (a - b).abs() + 1e-8);
    }

    #[test]
    fn perturbation_respects_bounds(t in 0.0f64..50.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let pert = shipped("jiang").problem.pert;
        let (fy, fz) = (pert.value(t, &[y])[0], pert.value(t, &[z])[0]);
        prop_assert!(fy.abs() <= pert.mu() + 1e-15);
        prop_assert!((fy - fz).abs() <= pert.gamma() * (y - z).abs() + 1e-15);
        prop_assert!((fy - jiang_f(t, y)).abs() <= 1e-15);
    }
}
