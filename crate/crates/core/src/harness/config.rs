//! Experiment configuration and its TOML text form.
//!
//! ```toml
//! episodes = 2000
//! eval_every = 10
//! n_seeds = 30
//! base_seed = 0
//!
//! [chain]
//! gamma = 0.95
//! n_noise = 10
//!
//! [[algorithm]]
//! kind = "GTD_IST"
//! alpha = 0.1
//! beta = 0.01
//! eta = 0.001
//! ```
//!
//! Exactly one of `[chain]` or `[star]` must be present; every
//! `[[algorithm]]` table adds one learner. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::envs::{ChainConfig, DottedTarget, NoiseMode, StarConfig};
use crate::error::{Error, Result};
use crate::learners::{AlgorithmKind, Schedule, StepSizes};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentConfig {
    Chain(ChainConfig),
    Star(StarConfig),
}

/// Initial parameter vector of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    #[default]
    Zeros,
    /// 1 on every noise coordinate, 0 on the base features.
    Unfavorable,
    /// 1 everywhere.
    Ones,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    /// Name in traces; unique within one experiment.
    pub label: String,
    pub kind: AlgorithmKind,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub init: Init,
    pub schedule: Schedule,
}

impl AlgorithmSpec {
    /// Labelled after the algorithm, constant step sizes, zero init.
    pub fn new(kind: AlgorithmKind, alpha: f64, beta: f64, eta: f64) -> Self {
        Self {
            label: kind.name().to_string(),
            kind,
            alpha,
            beta,
            eta,
            init: Init::Zeros,
            schedule: Schedule::Constant,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn step_sizes(&self) -> Result<StepSizes> {
        StepSizes::new(self.alpha, self.beta, self.schedule)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    pub episodes: usize,
    /// Transitions per episode on the continuing star task.
    pub steps_per_episode: usize,
    pub eval_every: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Fill `wall_ms`; otherwise it is 0 and traces are reproducible byte for byte.
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(environment: EnvironmentConfig, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            environment,
            algorithms,
            episodes: 2000,
            steps_per_episode: 100,
            eval_every: 10,
            n_seeds: 30,
            base_seed: 0,
            record_wall_time: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_seeds as u64).map(|i| self.base_seed + i)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.environment {
            EnvironmentConfig::Chain(c) => c.validate()?,
            EnvironmentConfig::Star(s) => s.validate()?,
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if self.steps_per_episode == 0 {
            return Err(Error::Config("steps_per_episode must be at least 1".into()));
        }
        if self.base_seed.checked_add(self.n_seeds as u64).is_none() {
            return Err(Error::Config("seed range overflows u64".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no [[algorithm]] tables".into()));
        }
        for (i, alg) in self.algorithms.iter().enumerate() {
            if alg.label.is_empty() || alg.label.contains(|c: char| c == ',' || c == '"' || c.is_control()) {
                return Err(Error::Config(format!(
                    "label `{}` must be non-empty without commas or quotes",
                    alg.label
                )));
            }
            if self.algorithms[..i].iter().any(|a| a.label == alg.label) {
                return Err(Error::Config(format!(
                    "duplicate algorithm label `{}`; set `label` to tell them apart",
                    alg.label
                )));
            }
            if !(alg.alpha > 0.0) {
                return Err(Error::Config(format!(
                    "{}: alpha must be positive, got {}",
                    alg.label, alg.alpha
                )));
            }
            alg.step_sizes()
                .map_err(|e| Error::Config(format!("{}: {e}", alg.label)))?;
            if !(alg.eta >= 0.0 && alg.eta.is_finite()) {
                return Err(Error::Config(format!(
                    "{}: eta must be finite and >= 0, got {}",
                    alg.label, alg.eta
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    episodes: Option<usize>,
    steps_per_episode: Option<usize>,
    eval_every: Option<usize>,
    n_seeds: Option<usize>,
    base_seed: Option<u64>,
    record_wall_time: Option<bool>,
    chain: Option<RawChain>,
    star: Option<RawStar>,
    #[serde(default)]
    algorithm: Vec<RawAlgorithm>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    n_states: Option<usize>,
    gamma: Option<f64>,
    n_noise: Option<usize>,
    noise_sigma: Option<f64>,
    noise_mode: Option<RawNoiseMode>,
    left_terminal: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStar {
    n_outer: Option<usize>,
    gamma: Option<f64>,
    n_noise: Option<usize>,
    noise_sigma: Option<f64>,
    noise_mode: Option<RawNoiseMode>,
    dotted: Option<RawDotted>,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawNoiseMode {
    PerVisit,
    Frozen,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawDotted {
    Outer,
    OtherStates,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    kind: String,
    label: Option<String>,
    alpha: f64,
    beta: f64,
    #[serde(default)]
    eta: f64,
    #[serde(default)]
    init: Init,
    /// `α_t = α / (1 + t·decay)` when present.
    decay: Option<f64>,
}

impl From<RawNoiseMode> for NoiseMode {
    fn from(m: RawNoiseMode) -> Self {
        match m {
            RawNoiseMode::PerVisit => NoiseMode::PerVisit,
            RawNoiseMode::Frozen => NoiseMode::Frozen,
        }
    }
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let environment = match (self.chain, self.star) {
            (Some(c), None) => {
                let d = ChainConfig::default();
                EnvironmentConfig::Chain(ChainConfig {
                    n_states: c.n_states.unwrap_or(d.n_states),
                    gamma: c.gamma.unwrap_or(d.gamma),
                    n_noise: c.n_noise.unwrap_or(d.n_noise),
                    noise_sigma: c.noise_sigma.unwrap_or(d.noise_sigma),
                    noise_mode: c.noise_mode.map_or(d.noise_mode, Into::into),
                    left_terminal: c.left_terminal.unwrap_or(d.left_terminal),
                    seed: 0,
                })
            }
            (None, Some(s)) => {
                let d = StarConfig::default();
                EnvironmentConfig::Star(StarConfig {
                    n_outer: s.n_outer.unwrap_or(d.n_outer),
                    gamma: s.gamma.unwrap_or(d.gamma),
                    n_noise: s.n_noise.unwrap_or(d.n_noise),
                    noise_sigma: s.noise_sigma.unwrap_or(d.noise_sigma),
                    noise_mode: s.noise_mode.map_or(d.noise_mode, Into::into),
                    dotted: match s.dotted {
                        None => d.dotted,
                        Some(RawDotted::Outer) => DottedTarget::Outer,
                        Some(RawDotted::OtherStates) => DottedTarget::OtherStates,
                    },
                    seed: 0,
                })
            }
            (Some(_), Some(_)) => return Err(Error::Config("both [chain] and [star] given".into())),
            (None, None) => return Err(Error::Config("missing [chain] or [star] section".into())),
        };
        let algorithms = self
            .algorithm
            .into_iter()
            .map(|a| {
                let kind: AlgorithmKind = a.kind.parse()?;
                Ok(AlgorithmSpec {
                    label: a.label.unwrap_or_else(|| kind.name().to_string()),
                    kind,
                    alpha: a.alpha,
                    beta: a.beta,
                    eta: a.eta,
                    init: a.init,
                    schedule: a.decay.map_or(Schedule::Constant, |rate| Schedule::Decaying { rate }),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = ExperimentConfig::new(environment, algorithms);
        cfg.episodes = self.episodes.unwrap_or(cfg.episodes);
        cfg.steps_per_episode = self.steps_per_episode.unwrap_or(cfg.steps_per_episode);
        cfg.eval_every = self.eval_every.unwrap_or(cfg.eval_every);
        cfg.n_seeds = self.n_seeds.unwrap_or(cfg.n_seeds);
        cfg.base_seed = self.base_seed.unwrap_or(cfg.base_seed);
        cfg.record_wall_time = self.record_wall_time.unwrap_or(cfg.record_wall_time);
        Ok(cfg)
    }
}
