//! Equilibrium search on two scenarios: a constant forcing with ȳ = 0.3, and
//! the Jiang system whose pointwise roots drift with t.

use conjlab::conjugacy::MapPath;
use conjlab::scenario::Scenario;
use conjlab::stability::EquilibriumSearch;
use conjlab::suite::equilibrium_grid;

fn main() -> conjlab::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/");
    let grid = equilibrium_grid(50.0);
    for name in ["s4_constant", "jiang"] {
        let sc = Scenario::load(format!("{dir}{name}.scn"), 0x5EED)?;
        let p = &sc.problem;
        match p.find_equilibrium(&[0.0], &grid, sc.tolerances.eq)? {
            EquilibriumSearch::Found(c) => {
                println!("{name}: ȳ = {:.12}, residuals {:.1e} / {:.1e}", c.ybar[0], c.residual_ode, c.residual_fpe);
                for t in [1.0, 5.0, 10.0, 20.0] {
                    let h0 = p.h_map(t, &[0.0], MapPath::FlowComposition)?[0];
                    println!("  H({t:>4}, 0) = {h0:.12}");
                }
                for e in p.equilibrium_limits(&c, &[5.0, 10.0, 20.0], sc.tolerances.num) {
                    println!("  {:<40} {:.2e}", e.check_id, e.measured);
                }
            }
            EquilibriumSearch::NotFound(c) => println!(
                "{name}: no equilibrium; the root at t = 0 ({:.6}) leaves a residual {:.3e} on the grid",
                c.ybar[0], c.residual_ode
            ),
        }
    }
    Ok(())
}
