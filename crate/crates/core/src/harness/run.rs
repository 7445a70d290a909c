use std::ops::Range;
use std::time::Instant;

use nalgebra::DVector;

use super::config::{AlgorithmSpec, EnvironmentConfig, ExperimentConfig, Init};
use crate::envs::{build_chain, build_star, ChainConfig, ChainSampler, Environment, Sampler, StarConfig, StarSampler};
use crate::error::{Error, Result};
use crate::learners::{count_nonzero, Learner, LearnerState, Transition};
use crate::objectives;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GTD_IST_THREADS";

/// One evaluation point of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub algorithm: String,
    pub seed: u64,
    pub episode: usize,
    pub rmspbe: f64,
    /// Coordinates of θ with magnitude above `1e-12`.
    pub nnz: usize,
    pub wall_ms: f64,
}

/// Records ordered by (algorithm, seed, episode).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentTrace {
    pub records: Vec<Record>,
}

impl ExperimentTrace {
    pub fn new(mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| (&a.algorithm, a.seed, a.episode).cmp(&(&b.algorithm, b.seed, b.episode)));
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one (algorithm, seed) run.
    pub fn run<'a>(&'a self, algorithm: &'a str, seed: u64) -> impl Iterator<Item = &'a Record> + 'a {
        self.records
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.seed == seed)
    }
}

/// Everything a single run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub theta: DVector<f64>,
    /// Coordinates of `theta` that belong to noise features.
    pub noise_range: Range<usize>,
}

impl RunOutcome {
    pub fn noise_nnz(&self) -> usize {
        count_nonzero(&self.theta.as_slice()[self.noise_range.clone()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Runs (algorithm, seed) pairs on a rayon pool. Without the `parallel`
    /// feature this is the same as `Sequential`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

enum Stream {
    Chain(ChainSampler),
    Star { sampler: StarSampler, steps: usize },
}

impl Stream {
    /// Feeds one episode to `visit`.
    fn episode(&mut self, buf: &mut Transition, mut visit: impl FnMut(&Transition) -> Result<()>) -> Result<()> {
        match self {
            Stream::Chain(s) => s.run_episode(usize::MAX, buf, visit).map(|_| ()),
            Stream::Star { sampler, steps } => {
                for _ in 0..*steps {
                    sampler.next_into(buf);
                    visit(buf)?;
                }
                Ok(())
            }
        }
    }
}

/// Builds the environment and transition stream for one seed.
pub fn build_environment(cfg: &ExperimentConfig, seed: u64) -> Result<Environment> {
    build(cfg, seed).map(|(env, _)| env)
}

fn build(cfg: &ExperimentConfig, seed: u64) -> Result<(Environment, Stream)> {
    Ok(match &cfg.environment {
        EnvironmentConfig::Chain(c) => {
            let (env, s) = build_chain(&ChainConfig { seed, ..c.clone() })?;
            (env, Stream::Chain(s))
        }
        EnvironmentConfig::Star(c) => {
            let (env, s) = build_star(&StarConfig { seed, ..c.clone() })?;
            (
                env,
                Stream::Star {
                    sampler: s,
                    steps: cfg.steps_per_episode,
                },
            )
        }
    })
}

fn initial_theta(env: &Environment, init: Init) -> DVector<f64> {
    let mut theta = DVector::zeros(env.dim());
    match init {
        Init::Zeros => {}
        Init::Unfavorable => theta.rows_mut(env.features.base_dim(), env.features.n_noise).fill(1.0),
        Init::Ones => theta.fill(1.0),
    }
    theta
}

/// Runs `alg` for `cfg.episodes` episodes on the environment built from
/// `seed`. Evaluation points are episode 0, every `eval_every`-th episode,
/// and the last episode.
pub fn run_one(cfg: &ExperimentConfig, alg: &AlgorithmSpec, seed: u64) -> Result<RunOutcome> {
    let tag = |source: Error| Error::Run {
        algorithm: alg.label.clone(),
        seed,
        source: Box::new(source),
    };
    let (env, mut stream) = build(cfg, seed).map_err(tag)?;
    let learner = Learner::new(alg.kind, env.target.gamma());
    let mut state =
        LearnerState::new(alg.kind, initial_theta(&env, alg.init), alg.eta, alg.step_sizes()?).map_err(tag)?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.episodes / cfg.eval_every + 2);
    let mut record = |episode: usize, theta: &DVector<f64>| -> Result<()> {
        records.push(Record {
            algorithm: alg.label.clone(),
            seed,
            episode,
            rmspbe: objectives::rmspbe(theta, &env.expectations)?,
            nnz: count_nonzero(theta.as_slice()),
            wall_ms: if cfg.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
        Ok(())
    };
    record(0, &state.theta).map_err(tag)?;
    let mut buf = Transition::zeros(env.dim());
    for episode in 1..=cfg.episodes {
        stream
            .episode(&mut buf, |t| learner.step_in_place(&mut state, t))
            .map_err(tag)?;
        if episode % cfg.eval_every == 0 || episode == cfg.episodes {
            record(episode, &state.theta).map_err(tag)?;
        }
    }
    Ok(RunOutcome {
        records,
        theta: state.theta,
        noise_range: env.features.noise_range(),
    })
}

/// Every (algorithm, seed) run of `cfg` with the default execution mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTrace> {
    run_experiment_with(cfg, Execution::default())
}

/// Runs are independent, so the trace does not depend on `exec`. If several
/// runs fail, the error of the first in (algorithm, seed) order is returned.
pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentTrace> {
    cfg.validate()?;
    let tasks: Vec<(&AlgorithmSpec, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| cfg.seeds().map(move |s| (a, s)))
        .collect();
    let outcomes = run_tasks(cfg, &tasks, exec)?;
    let mut records = Vec::new();
    for outcome in outcomes {
        records.extend(outcome?.records);
    }
    Ok(ExperimentTrace::new(records))
}

fn run_tasks(
    cfg: &ExperimentConfig,
    tasks: &[(&AlgorithmSpec, u64)],
    exec: Execution,
) -> Result<Vec<Result<RunOutcome>>> {
    let sequential = || tasks.iter().map(|&(a, s)| run_one(cfg, a, s)).collect();
    match exec {
        Execution::Sequential => Ok(sequential()),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            let work = || tasks.par_iter().map(|&(a, s)| run_one(cfg, a, s)).collect();
            match thread_cap()? {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map(|pool| pool.install(work))
                    .map_err(|e| Error::Config(format!("cannot build thread pool: {e}"))),
                None => Ok(work()),
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => Ok(sequential()),
    }
}

/// Parses [`THREADS_ENV`]; unset means no cap.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}
