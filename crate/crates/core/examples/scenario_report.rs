//! Loads a scenario from text, runs one suite and prints the report as a
//! table and as JSON.
//!
//! `cargo run --example scenario_report -- path/to/file.scn [suite]`

use conjlab::scenario::{Scenario, DEFAULT_SEED};
use conjlab::suite::{run_suite, Suite};

const INLINE: &str = "
name = inline_tanh
[linear]
A = diag(-2, -1)
[perturbation]
f = scaled_tanh(0.3)
[constants]
K = 1
alpha = 1
M = 2
gamma = 0.3
mu = 0.3 * sqrt(2)
r = 2
[probes]
states = lattice(-1, 1, 3)
jacobian_times = [1, 3]
jacobian_states = [[0.5, 0.5], [-1, 0.2], [0.1, -0.7], [1, 1], [-0.3, -0.3], [0.8, -0.9], [0, 0.6], [-0.6, 0]]
";

fn main() -> conjlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sc = match args.first() {
        Some(path) => Scenario::load(path, DEFAULT_SEED)?,
        None => Scenario::from_text(INLINE, DEFAULT_SEED)?,
    };
    let suite: Suite = args.get(1).map_or(Ok(Suite::Smoothness), |s| s.parse())?;
    let report = run_suite(&sc, suite);
    print!("{}", report.to_table());
    if let Some(e) = report.entries.first() {
        println!(
            "\nfirst entry as JSON:\n{}",
            serde_json::to_string_pretty(e).unwrap()
        );
    }
    Ok(())
}
