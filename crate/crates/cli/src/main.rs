//! `udist`: distances between unitaries, metric property checks, Grover
//! bounds, entangling distance and circuit verification.
//!
//! Exit codes: 0 success or pass, 1 property violation or verification
//! fail, 2 usage or parse error, 3 rejected operator (non-unitary input or
//! dependent bases), 4 inconclusive verification, 5 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use udist::circuit::Shots;

use commands::{DistArgs, DistMethod, Failure, Iterations};
use output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "udist",
    version,
    about = "u-distance toolkit for unitary operators"
)]
struct Cli {
    /// Master seed for every random choice
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Unitarity tolerance for input matrices
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance between two unitary matrices
    Dist {
        u: PathBuf,
        v: PathBuf,
        #[arg(long, value_enum, default_value_t = DistMethod::Arc)]
        method: DistMethod,
        /// Random starts for the brute-force method
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Descent steps per start for the brute-force method
        #[arg(long, default_value_t = 500)]
        refine: usize,
    },
    /// Randomized check of the metric properties
    CheckMetric {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Add the reversed triangle inequality as a negative control
        #[arg(long)]
        inject_reversed_triangle: bool,
    },
    /// Success probabilities and query bounds for Grover search
    Grover {
        /// Search space size
        #[arg(short = 'n', long = "n")]
        n: usize,
        /// `auto`, a count, or an inclusive range such as `0..=4`
        #[arg(short = 'k', long = "k", default_value = "auto")]
        k: Iterations,
        /// Success margin for the lower-bound chain
        #[arg(short = 'c', long = "c", default_value_t = 0.1)]
        c: f64,
        /// Closed-form success probability only; no operators are built
        #[arg(long)]
        success_only: bool,
    },
    /// Distance from a gate to the local gates
    Entangle {
        /// `cnot`, `swap` or a matrix file
        gate: String,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Sweep cap per descent stage
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Also report the minimum over this many random local gates
        #[arg(long, default_value_t = 0)]
        probe: usize,
    },
    /// Check whether V approximates U by basis-state measurements
    Verify {
        /// Circuit or matrix file
        u: PathBuf,
        /// Circuit or matrix file
        v: PathBuf,
        /// `mub` or a basis-set file
        #[arg(long, default_value = "mub")]
        bases: String,
        #[arg(long)]
        epsilon: f64,
        /// `exact` or a shot count per state
        #[arg(long, default_value = "exact", value_parser = commands::parse_shots)]
        shots: Shots,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("UDIST_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: &Cli) -> Result<output::Report, Failure> {
    match &cli.command {
        Command::Dist {
            u,
            v,
            method,
            samples,
            refine,
        } => commands::dist(&DistArgs {
            u,
            v,
            method: *method,
            samples: *samples,
            refine: *refine,
            seed: cli.seed,
            tol: cli.tol,
        }),
        Command::CheckMetric {
            dim,
            trials,
            inject_reversed_triangle,
        } => commands::check_metric(*dim, *trials, cli.seed, *inject_reversed_triangle),
        Command::Grover {
            n,
            k,
            c,
            success_only,
        } => commands::grover(*n, k, *c, *success_only),
        Command::Entangle {
            gate,
            restarts,
            iters,
            probe,
        } => commands::entangle(gate, *restarts, *iters, *probe, cli.seed),
        Command::Verify {
            u,
            v,
            bases,
            epsilon,
            shots,
        } => commands::verify(u, v, bases, *epsilon, *shots, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(&cli) {
        Ok(report) => {
            if let Err(e) = output::emit(report.render(cli.format), cli.out.as_deref()) {
                eprintln!("udist: writing report: {e}");
                return ExitCode::from(output::code::USAGE as u8);
            }
            ExitCode::from(report.code as u8)
        }
        Err(f) => {
            eprintln!("udist: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
