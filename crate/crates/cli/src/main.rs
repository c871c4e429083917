//! Batch command-line surface: simulate, fit, score, eval-l1, sweep, bench.
//!
//! Configuration precedence is flags > JSON config file (`--config`) >
//! built-in defaults, and the resolved configuration is echoed into every
//! output manifest. All randomness flows from one root seed: train/val/test
//! trajectories use `seed`, `seed + 1`, `seed + 2`, and benchmark
//! replication `r` uses `seed + 100 r`.
//!
//! Exit codes: 0 success, 2 usage/config errors, 3 numerical failures,
//! 4 I/O errors.

mod commands;
mod common;

use clap::{Parser, Subcommand};
use hawkes_rkhs::Error;

#[derive(Parser)]
#[command(
    name = "hawkes-rkhs",
    version,
    about = "Simulation and RKHS-based estimation of nonlinear Hawkes processes"
)]
struct Cli {
    /// Worker threads for sweep/bench grids (default: all cores). Results
    /// are byte-identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate train/validation/test trajectories of a ground-truth model.
    Simulate(commands::simulate::SimulateArgs),
    /// Fit a model to an events file.
    Fit(commands::fit::FitArgs),
    /// Score a fitted model on an events file (exact test log-likelihood).
    Score(commands::score::ScoreArgs),
    /// L1 error of a fitted model against a ground-truth model.
    EvalL1(commands::eval_l1::EvalL1Args),
    /// Sweep the smoothing parameters omega and M (best L1 per pair).
    Sweep(commands::sweep::SweepArgs),
    /// Benchmark methods over growing horizons with seed replications.
    Bench(commands::bench::BenchArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // ignore failure: the global pool can only be set once (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args, verbose),
        Command::Fit(args) => commands::fit::run(args, verbose),
        Command::Score(args) => commands::score::run(args, verbose),
        Command::EvalL1(args) => commands::eval_l1::run(args, verbose),
        Command::Sweep(args) => commands::sweep::run(args, verbose),
        Command::Bench(args) => commands::bench::run(args, verbose),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::Numerical { iterate, .. } = &err {
                eprintln!("iterate: {:?}", iterate);
            }
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 4,
        Error::Numerical { .. } | Error::Simulation(_) => 3,
        _ => 2,
    }
}
