//! Seeded multi-run experiments over the benchmark environments.
//!
//! A run is one (algorithm, seed) pair. Each run builds its own environment
//! and sampler from its seed, so runs share nothing and may execute in any
//! order or in parallel; the merged trace is sorted afterwards and does not
//! depend on scheduling.

mod config;
mod csv;
mod run;
mod summary;

pub use self::config::{AlgorithmSpec, EnvironmentConfig, ExperimentConfig, Init};
pub use self::csv::{emit_csv, parse_csv, read_csv, to_csv_string, write_csv, HEADER};
pub use self::run::{
    build_environment, run_experiment, run_experiment_with, run_one, thread_cap, Execution, ExperimentTrace, Record,
    RunOutcome, THREADS_ENV,
};
pub use self::summary::{final_row, mean_and_std_error, pooled_std_error, summarize, SummaryRow};
