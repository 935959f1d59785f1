//! The Picard iteration for z* on the Jiang scenario: successive differences,
//! their ratios, and the contraction constant Kγ/α they should respect.

use conjlab::scenario::Scenario;

fn main() -> conjlab::Result<()> {
    let sc = Scenario::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/jiang.scn"),
        0x5EED,
    )?;
    let p = &sc.problem;
    println!("q = Kγ/α = {}", p.q());
    for (t, xi) in [(2.0, 0.0), (5.0, 1.5), (10.0, -2.0)] {
        let z = p.z_star(t, t, &[xi], &sc.picard)?;
        println!(
            "\nz*({t};({t},{xi})) = {:.12}  after {} iterations",
            z.value[0],
            z.trace.iterations()
        );
        let ratios = z.trace.ratios();
        for (j, d) in z.trace.diffs.iter().enumerate() {
            let r = if j == 0 {
                String::new()
            } else {
                format!("{:.4}", ratios[j - 1])
            };
            println!("  j = {j:>2}  ‖z_(j+1) − z_j‖ = {d:.3e}  {r}");
        }
    }
    let c = p.contraction_ratio(3.0, 0.0, &[1.0], 8, sc.seed, sc.picard.grid_pts)?;
    println!("\nsup|Γφ₁ − Γφ₂| / (q sup|φ₁ − φ₂|) over 8 random pairs: {c:.4}");
    Ok(())
}
