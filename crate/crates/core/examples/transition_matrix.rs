//! Transition matrices of x' = A(t)x and the checks on a UAS certificate.

use conjlab::linalg::op_norm;
use conjlab::linear::{CoefficientMatrix, LinearSystem, ScalarFn};
use conjlab::ode::IntegratorConfig;

fn main() -> conjlab::Result<()> {
    let cfg = IntegratorConfig::default();

    // damping −1 with rotation rate 0.5: ‖Φ(t,s)‖ = e^{−(t−s)}
    let rot = LinearSystem::new(CoefficientMatrix::rot(-1.0, 0.5), 1.25f64.sqrt(), 1.0, 1.0)?;
    let phi = rot.transition(3.0, 1.0, &cfg)?;
    println!("Φ(3,1) =\n{phi:.10}");
    println!(
        "‖Φ(3,1)‖ = {:.12}, e⁻² = {:.12}",
        op_norm(&phi),
        (-2f64).exp()
    );

    let pairs: Vec<(f64, f64)> = (0..8).map(|i| (i as f64 * 1.5 + 2.0, i as f64)).collect();
    let triples = [(5.0, 2.0, 0.0), (9.0, 4.5, 1.0)];
    for e in [
        rot.verify_uas(&pairs, &cfg, 1e-9),
        rot.verify_cocycle(&triples, &cfg, 1e-8),
        rot.verify_det(&pairs, &cfg),
    ] {
        println!(
            "{:<20} {:.3e}  {}",
            e.check_id,
            e.measured,
            if e.pass { "ok" } else { "FAIL" }
        );
    }

    // a(t) = −1 + 0.5 sin t is UAS with K = e, α = 1/2
    let osc = CoefficientMatrix::Diagonal(vec![ScalarFn::Osc {
        mean: -1.0,
        amp: 0.5,
        freq: 1.0,
    }]);
    let sys = LinearSystem::new(osc, 1.5, 1f64.exp(), 0.5)?;
    for t in [1.0f64, 5.0, 20.0] {
        let got = sys.transition(t, 0.0, &cfg)?[(0, 0)];
        let want = (-t + 0.5 * (1.0 - t.cos())).exp();
        println!("Φ({t},0) = {got:.12e}  (closed form {want:.12e})");
    }
    let wrong = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 2.0, 1.0, 2.0)?;
    let e = wrong.verify_uas(&[(1.0, 0.0)], &cfg, 1e-9);
    println!(
        "claimed α = 2 for a ≡ −1: pass = {}, excess {:.4e}",
        e.pass, e.measured
    );
    Ok(())
}
