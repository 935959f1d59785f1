use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use conjlab::conjugacy::MapPath;
use conjlab::plot::{emit_plotdata, sweep, Quantity, SweepSpec};
use conjlab::scenario::{Scenario, DEFAULT_SEED};
use conjlab::suite::{run_suite, Suite};
use conjlab::Result;

#[derive(Parser)]
#[command(
    name = "conjlab",
    version,
    about = "Numerical verification of topological conjugacy for perturbed linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; exits nonzero if any entry fails.
    Verify {
        file: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        /// write the JSON report here
        #[arg(long)]
        json: Option<PathBuf>,
        /// write the CSV report here
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Print the transition matrix Φ(t,s).
    Phi {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
    },
    /// Evaluate H(t,x) or G(t,x).
    Map {
        #[arg(value_enum)]
        which: Which,
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// state, e.g. "0.7" or "1, -0.5"
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// also evaluate the literal integral/Picard definition
        #[arg(long)]
        literal: bool,
    },
    /// Print a long-format CSV curve.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "H")]
    H,
    #[value(name = "G")]
    G,
}

fn parse_state(s: &str) -> Result<Vec<f64>> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split([',', ' '])
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| conjlab::Error::InvalidArgument(format!("bad state component '{p}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify {
            file,
            suite,
            json,
            csv,
            seed,
        } => {
            let suite: Suite = suite.parse()?;
            let sc = Scenario::load(&file, seed)?;
            let report = run_suite(&sc, suite);
            print!("{}", report.to_table());
            if let Some(path) = json {
                std::fs::write(path, report.to_json() + "\n")?;
            }
            if let Some(path) = csv {
                std::fs::write(path, report.to_csv())?;
            }
            Ok(report.passed())
        }
        Command::Phi { file, t, s } => {
            let sc = Scenario::load(&file, DEFAULT_SEED)?;
            let phi = sc.problem.linear.transition(t, s, &sc.problem.cfg)?;
            for i in 0..phi.nrows() {
                let row: Vec<String> = phi.row(i).iter().map(|v| format!("{v:.15e}")).collect();
                println!("{}", row.join(" "));
            }
            Ok(true)
        }
        Command::Map {
            which,
            file,
            t,
            x,
            literal,
        } => {
            let sc = Scenario::load(&file, DEFAULT_SEED)?;
            let p = &sc.problem;
            let v = parse_state(&x)?;
            let eval = |path| match which {
                Which::H => p.h_map(t, &v, path),
                Which::G => p.g_map(t, &v, path),
            };
            let show = |out: &[f64]| {
                out.iter()
                    .map(|c| format!("{c:.15e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("{}", show(&eval(MapPath::FlowComposition)?));
            if literal {
                println!("{}", show(&eval(MapPath::IntegralDefinition)?));
            }
            Ok(true)
        }
        Command::Sweep {
            file,
            quantity,
            t0,
            t1,
            n,
        } => {
            let sc = Scenario::load(&file, DEFAULT_SEED)?;
            let spec = SweepSpec {
                quantity: quantity.parse::<Quantity>()?,
                t0,
                t1,
                n,
            };
            print!("{}", emit_plotdata(&sweep(&sc, &spec)?));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
