use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gtd_ist::harness::{self, ExperimentConfig};
use gtd_ist::Error;

#[derive(Parser)]
#[command(
    name = "gtd-ist",
    version,
    about = "Run gradient-TD experiments and write learning curves as CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `n_seeds`.
        #[arg(long)]
        seeds: Option<usize>,
        /// Record wall-clock milliseconds instead of 0.
        #[arg(long)]
        timing: bool,
        /// Suppress the summary table.
        #[arg(long)]
        quiet: bool,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    let Command::Run {
        config,
        out,
        seeds,
        timing,
        quiet,
    } = Cli::parse().command;

    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    if let Some(n) = seeds {
        cfg.n_seeds = n;
    }
    cfg.record_wall_time |= timing;
    if let Err(e) = cfg.validate() {
        return fail(&e, EXIT_CONFIG);
    }

    let trace = match harness::run_experiment(&cfg) {
        Ok(trace) => trace,
        Err(e) if e.is_divergence() => return fail(&e, EXIT_DIVERGED),
        Err(e @ Error::Config(_)) => return fail(&e, EXIT_CONFIG),
        Err(e) => return fail(&e, EXIT_IO),
    };
    if let Err(e) = harness::emit_csv(&trace, &out) {
        return fail(&e, EXIT_IO);
    }

    if !quiet {
        println!(
            "{:<12} {:>8} {:>6} {:>14} {:>12} {:>8}",
            "algorithm", "episode", "seeds", "rmspbe", "std_err", "nnz"
        );
        let rows = harness::summarize(&trace).unwrap_or_default();
        for label in cfg.algorithms.iter().map(|a| &a.label) {
            if let Some(r) = harness::final_row(&rows, label) {
                println!(
                    "{:<12} {:>8} {:>6} {:>14.6e} {:>12.3e} {:>8.2}",
                    r.algorithm, r.episode, r.n_seeds, r.mean_rmspbe, r.std_error, r.mean_nnz
                );
            }
        }
        println!("wrote {} records to {}", trace.len(), out.display());
    }
    ExitCode::SUCCESS
}

fn fail(e: &Error, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}
