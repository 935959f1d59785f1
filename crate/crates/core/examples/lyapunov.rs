//! Converse Lyapunov function P(t) for a linear part and the decrease of
//! V = yᵀP y along perturbed trajectories.

use conjlab::ode;
use conjlab::scenario::Scenario;
use conjlab::stability::{LyapunovCertificate, QForm};

fn main() -> conjlab::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/");
    let s3 = Scenario::load(format!("{dir}s3_rot.scn"), 0x5EED)?;
    let p = &s3.problem;
    let cert = LyapunovCertificate::new(&p.linear, QForm::scalar(1.0, 2), p.pert.gamma(), &p.cfg)?;
    println!(
        "p⁻ = {:.6}, p⁺ = {:.6}, margin = {:.6}",
        cert.p_minus, cert.p_plus, cert.decay_margin
    );
    println!("P(0) =\n{:.10}", cert.p_at(0.0)?);
    println!(
        "identity residual {:.2e}",
        cert.identity_residual(&[0.5, 1.0, 5.0], 1e-3)?
    );

    let sin = Scenario::load(format!("{dir}scaled_sin.scn"), 0x5EED)?;
    let q = &sin.problem;
    let cert = LyapunovCertificate::new(&q.linear, QForm::scalar(1.0, 1), q.pert.gamma(), &q.cfg)?;
    let traj = ode::integrate(q.rhs(), 0.0, &[2.0], 8.0, &q.cfg)?;
    let p0 = cert.p_at(0.0)?[(0, 0)];
    println!("\nscaled_sin, margin {:.3}", cert.decay_margin);
    for t in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let y = traj.eval(t)[0];
        println!("  t = {t}: y = {y:+.8}, V = {:.3e}", p0 * y * y);
    }
    for e in cert.derivative_check(&[traj], sin.tolerances.lyap) {
        println!(
            "  {:<30} {:+.3e} ({})",
            e.check_id,
            e.measured,
            if e.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
