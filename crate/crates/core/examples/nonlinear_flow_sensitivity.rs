//! Perturbed flow y(t,τ,η) and its sensitivity ∂y/∂η on the shipped Jiang
//! scenario, checked against central differences and the Gronwall bound.

use conjlab::scenario::Scenario;

fn main() -> conjlab::Result<()> {
    let sc = Scenario::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/jiang.scn"),
        0x5EED,
    )?;
    let p = &sc.problem;
    let h = 1e-5;
    println!(
        "{:>5} {:>6} {:>16} {:>16} {:>10} {:>12}",
        "t", "η", "y(t,0,η)", "∂y/∂η", "FD rel", "e^{-0.8t}"
    );
    for t in [0.5, 2.0, 5.0, 10.0] {
        for eta in [-1.0, 0.3, 2.0] {
            let (y, _) = p.flow_y(t, 0.0, &[eta])?;
            let v = p.variational_y(t, 0.0, &[eta])?[(0, 0)];
            let fd = (p.flow_y(t, 0.0, &[eta + h])?.0[0] - p.flow_y(t, 0.0, &[eta - h])?.0[0])
                / (2.0 * h);
            // |∂y/∂η| ≤ K e^{(Kγ−α)t}
            let bound = (-0.8 * t).exp();
            println!(
                "{t:>5} {eta:>6} {:>16.10} {v:>16.10} {:>10.1e} {bound:>12.6}",
                y[0],
                ((v - fd) / v).abs()
            );
        }
    }
    let chain = p.verify_chain(0.0, &[0.5], &[1.0, 3.0], 6.0, sc.tolerances.num);
    println!(
        "{} = {:.2e} ({})",
        chain.check_id,
        chain.measured,
        if chain.pass { "ok" } else { "FAIL" }
    );
    Ok(())
}
