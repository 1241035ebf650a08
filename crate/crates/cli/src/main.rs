//! `medzisc` command-line entry point.

mod analyze;
mod benchmark;
mod failure;
mod grid;
mod manifest;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "medzisc", version, about = "Mediation analysis of single-cell counts with mean and zero-proportion co-mediators")]
struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "MEDZISC_THREADS")]
    threads: Option<usize>,

    /// Only report warnings and errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one simulated replicate with known mediators.
    Simulate(simulate::Args),
    /// Screen and test mediators in a dataset.
    Analyze(analyze::Args),
    /// Score both methods over a grid of simulated scenarios.
    Benchmark(benchmark::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info })
        .parse_env("MEDZISC_LOG")
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let threads = rayon::current_num_threads();

    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a, threads),
        Command::Analyze(a) => analyze::run(a, threads),
        Command::Benchmark(a) => benchmark::run(a, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

/// Output directory shared by every subcommand.
fn ensure_dir(dir: &PathBuf) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}
