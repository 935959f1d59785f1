//! Uniform continuity of G: the budget L(ε), θ*, δ(ε) and an empirical check
//! on random pairs closer than δ.

use conjlab::scenario::Scenario;
use conjlab::suite::random_pairs;

fn main() -> conjlab::Result<()> {
    let sc = Scenario::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/jiang.scn"),
        0x5EED,
    )?;
    let p = &sc.problem;
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>8}",
        "ε", "L", "θ*", "δ", "clamped"
    );
    for eps in [1.0, 0.5, 0.1, 0.01, 0.001] {
        let b = p.continuity_budget(eps)?;
        println!(
            "{eps:>6} {:>10.6} {:>10.6} {:>12.6e} {:>8}",
            b.l, b.theta_star, b.delta, b.clamped
        );
    }
    let b = p.continuity_budget(0.1)?;
    let pairs = random_pairs(1, 2.0, 64, 0.9 * b.delta, 0.9 * b.delta, sc.seed);
    for e in p.check_uniform_continuity(0.1, &pairs, &[0.0, 1.0, b.l, 2.0 * b.l, 50.0]) {
        println!(
            "{:<45} {:.4e}  {}",
            e.check_id,
            e.measured,
            e.note.unwrap_or_default()
        );
    }
    for t in [1.0, 2.0, 5.0] {
        println!("C({t}) = {:.6}", p.lipschitz_factor_c(t));
    }
    Ok(())
}
