mod common;

use common::*;
use conjlab::conjugacy::{MapKind, MapPath, PicardConfig};
use conjlab::linalg::mat_vec;
use conjlab::scenario::lattice;
use proptest::prelude::*;

const PATHS: [MapPath; 2] = [MapPath::FlowComposition, MapPath::IntegralDefinition];

#[test]
fn zero_perturbation_gives_identity_maps() {
    let p = shipped("zero_f").problem;
    let z = p
        .z_star(3.0, 1.0, &[0.5, 0.5], &PicardConfig::default())
        .unwrap();
    assert_eq!(z.value, vec![0.0, 0.0]);
    assert_eq!(z.trace.iterations(), 1);
    assert_eq!(p.w_star(2.0, 1.0, &[1.0, -1.0]).unwrap(), vec![0.0, 0.0]);
    for path in PATHS {
        for t in [0.0, 2.0, 10.0] {
            let v = [0.3, -0.8];
            assert!(max_abs(&p.h_map(t, &v, path).unwrap(), &v) <= 1e-8);
            assert!(max_abs(&p.g_map(t, &v, path).unwrap(), &v) <= 1e-8);
        }
    }
    let samples = lattice(-1.0, 1.0, 3, 2);
    assert!(p
        .check_bijection(5.0, &samples, 1e-6)
        .iter()
        .all(|e| e.pass && e.measured <= 1e-8));
    let m = p.check_solution_mapping(0.0, &[1.0, 0.5], &[1.0, 3.0], 1e-6);
    assert!(m.iter().all(|e| e.pass && e.measured <= 1e-9), "{m:?}");
}

#[test]
fn maps_fix_the_origin_when_f_vanishes_there() {
    let p = shipped("scaled_sin").problem;
    for t in [1.0, 5.0] {
        assert!(p.h_map(t, &[0.0], MapPath::FlowComposition).unwrap()[0].abs() <= 1e-12);
        assert!(p.g_map(t, &[0.0], MapPath::FlowComposition).unwrap()[0].abs() <= 1e-12);
    }
}

#[test]
fn jiang_h_and_inverse() {
    let p = shipped("jiang").problem;
    let golden_h = golden("jiang", "H.t=4,xi=0.7")[0];
    for path in PATHS {
        let h = p.h_map(4.0, &[0.7], path).unwrap()[0];
        assert!((h - golden_h).abs() <= 1e-7);
        assert!((h - 0.7).abs() <= std::f64::consts::PI / 5.0);
        let back = p.g_map(4.0, &[h], path).unwrap()[0];
        assert!((back - 0.7).abs() <= 1e-6);
    }
    let both = p.map_both(MapKind::H, 4.0, &[0.7]).unwrap();
    assert!(both.residual_vs_other_path.unwrap() <= 1e-7);
}

#[test]
fn jiang_z_star_contracts_at_the_predicted_rate() {
    let p = shipped("jiang").problem;
    let z = p.z_star(2.0, 2.0, &[0.0], &p.picard).unwrap();
    assert!((z.value[0] - golden("jiang", "z_star.t=2,tau=2,xi=0")[0]).abs() <= 1e-8);
    let worst = z.trace.max_ratio_above(10.0 * p.picard.tol_fix).unwrap();
    assert!(worst <= p.q() + 0.05, "ratio {worst}");
    assert!((p.q() - 0.2).abs() < 1e-15);
}

#[test]
fn z_star_translation_identity() {
    // z*(s;(τ,ξ)) = z*(s;(r, x(r,τ,ξ)))
    let p = shipped("jiang").problem;
    for (tau, xi, r) in [(0.0, 1.0, 2.0), (3.0, -0.5, 1.0), (1.0, 0.2, 4.0)] {
        let res = p
            .identity_z_residual(3.0, tau, &[xi], r, &p.picard)
            .unwrap();
        assert!(res <= 1e-8, "τ={tau} ξ={xi} r={r}: {res}");
        let res = p.identity_w_residual(3.0, tau, &[xi], r, 257).unwrap();
        assert!(res <= 1e-8, "w: τ={tau} ξ={xi} r={r}: {res}");
    }
}

#[test]
fn w_star_at_an_equilibrium() {
    // w*(t;(τ,ȳ)) = (Φ(t,0) − I)ȳ, G(t,ȳ) = Φ(t,0)ȳ
    let p = shipped("s4_constant").problem;
    for t in [1.0f64, 5.0, 10.0] {
        let phi = (-t).exp();
        let w = p.w_star(t, 2.0, &[0.3]).unwrap()[0];
        assert!((w - (phi - 1.0) * 0.3).abs() <= 1e-8);
        let g = p.g_map(t, &[0.3], MapPath::FlowComposition).unwrap()[0];
        assert!((g - phi * 0.3).abs() <= 1e-8);
    }
}

#[test]
fn jiang_w_star_by_ivp_and_quadrature() {
    let p = shipped("jiang").problem;
    let ivp = p.w_star(3.0, 3.0, &[0.5]).unwrap()[0];
    let quad = p.w_star_quadrature(3.0, 3.0, &[0.5], 1e-11).unwrap()[0];
    assert!((ivp - quad).abs() <= 1e-8);
}

#[test]
fn bijection_on_shipped_lattices() {
    let jiang = shipped("jiang");
    for t in [0.0, 1.0, 5.0, 10.0] {
        let es = jiang.problem.check_bijection(t, &jiang.probes.states, 1e-6);
        assert!(es.iter().all(|e| e.pass), "t = {t}: {es:?}");
    }
    let s3 = shipped("s3_rot").problem;
    let box64 = lattice(-1.0, 1.0, 8, 2);
    assert_eq!(box64.len(), 64);
    let es = s3.check_bijection(5.0, &box64, 1e-6);
    assert!(es.iter().all(|e| e.pass), "{es:?}");
}

#[test]
fn solution_mapping_on_jiang_and_s4() {
    let p = shipped("jiang").problem;
    let es = p.check_solution_mapping(0.0, &[1.0], &[0.5, 1.0, 2.0, 5.0, 10.0], 1e-6);
    assert!(es.iter().all(|e| e.pass), "{es:?}");
    let s4 = shipped("s4_constant").problem;
    let es = s4.check_solution_mapping(1.0, &[0.3], &[2.0, 5.0, 10.0], 1e-6);
    assert!(es.iter().all(|e| e.pass), "{es:?}");
}

#[test]
fn gamma_is_a_contraction() {
    let p = shipped("jiang").problem;
    let ratio = p.contraction_ratio(3.0, 0.0, &[1.0], 6, 11, 129).unwrap();
    assert!(ratio <= 1.0 + 1e-6, "{ratio}");
}

#[test]
fn s3_conjugation_along_a_trajectory() {
    let p = shipped("s3_rot").problem;
    let xi = [0.6, -0.4];
    let h0 = p.h_map(0.0, &xi, MapPath::FlowComposition).unwrap();
    for t in [1.0, 4.0] {
        let x_t = mat_vec(&p.linear.transition(t, 0.0, &p.cfg).unwrap(), &xi);
        let lhs = p.h_map(t, &x_t, MapPath::FlowComposition).unwrap();
        let rhs = p.flow_y(t, 0.0, &h0).unwrap().0;
        assert!(max_abs(&lhs, &rhs) <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jiang_round_trips(x in -3.0f64..3.0, t in 0.0f64..12.0) {
        let p = shipped("jiang").problem;
        let h = p.h_map(t, &[x], MapPath::FlowComposition).unwrap();
        let back = p.g_map(t, &h, MapPath::FlowComposition).unwrap();
        prop_assert!((back[0] - x).abs() <= 1e-6);
        let g = p.g_map(t, &[x], MapPath::FlowComposition).unwrap();
        let fwd = p.h_map(t, &g, MapPath::FlowComposition).unwrap();
        prop_assert!((fwd[0] - x).abs() <= 1e-6);
    }

    #[test]
    fn maps_stay_within_proximity_bound(x in -2.0f64..2.0, y in -2.0f64..2.0, t in 0.0f64..10.0) {
        let p = shipped("s3_rot").problem;
        let bound = p.proximity_bound() + 1e-7;
        let v = [x, y];
        prop_assert!(conjlab::linalg::dist(&p.h_map(t, &v, MapPath::FlowComposition).unwrap(), &v) <= bound);
        prop_assert!(conjlab::linalg::dist(&p.g_map(t, &v, MapPath::FlowComposition).unwrap(), &v) <= bound);
    }

    #[test]
    fn literal_and_composition_paths_agree(x in -2.0f64..2.0, t in 0.0f64..5.0) {
        let p = shipped("jiang").problem;
        let a = p.h_map(t, &[x], MapPath::FlowComposition).unwrap()[0];
        let b = p.h_map(t, &[x], MapPath::IntegralDefinition).unwrap()[0];
        prop_assert!((a - b).abs() <= 1e-7);
    }
}
