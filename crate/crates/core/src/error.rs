use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A linear system was singular or too badly conditioned to trust.
    #[error("singular {what} (condition estimate {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last change {change:.3e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("regularization weight must be nonnegative, got {0}")]
    NegativeEta(f64),

    #[error("invalid threshold {0}: must be finite and nonnegative")]
    InvalidThreshold(f64),

    #[error("invalid step sizes: {0}")]
    InvalidStepSizes(String),

    /// Learner parameters blew past the divergence guard.
    #[error("learner diverged at step {step}: |value| = {magnitude:.3e}")]
    Divergence { step: u64, magnitude: f64 },

    #[error("mean squared Bellman error needs the explicit state model")]
    MsbeUnavailable,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("run {algorithm} (seed {seed}) failed: {source}")]
    Run {
        algorithm: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("empty trace")]
    EmptyTrace,

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when this error (or the run error wrapping it) is a learner divergence.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Run { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
