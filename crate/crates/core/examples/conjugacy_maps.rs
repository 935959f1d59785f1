//! H and G on a 2-D scenario, by both evaluation routes, with the round
//! trip and the distance from the identity.

use conjlab::conjugacy::{MapKind, MapPath};
use conjlab::linalg::dist;
use conjlab::scenario::Scenario;

fn main() -> conjlab::Result<()> {
    let sc = Scenario::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/s3_rot.scn"),
        0x5EED,
    )?;
    let p = &sc.problem;
    println!("Kμ/α = {:.6}", p.proximity_bound());
    let xi = [0.8, -0.4];
    for t in [0.0, 1.0, 5.0, 10.0] {
        let h = p.map_both(MapKind::H, t, &xi)?;
        let back = p.g_map(t, &h.output, MapPath::FlowComposition)?;
        println!(
            "t = {t:>4}: H = [{:+.10}, {:+.10}]  |H−ξ| = {:.4}  paths differ by {:.1e}  |G(H(ξ))−ξ| = {:.1e}",
            h.output[0],
            h.output[1],
            dist(&h.output, &xi),
            h.residual_vs_other_path.unwrap_or(f64::NAN),
            dist(&back, &xi)
        );
    }
    for e in p.check_solution_mapping(0.0, &xi, &[0.5, 2.0, 8.0], sc.tolerances.conj) {
        println!("{:<40} {:.2e}", e.check_id, e.measured);
    }
    Ok(())
}
