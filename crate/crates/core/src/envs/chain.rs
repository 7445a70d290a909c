//! Random walk on a line of states with a rewarding right end.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    stream_rng, validate_gamma, validate_sigma, BaseFeatures, Environment, FeatureScheme, NoiseMode, SampledStep,
    Sampler, NOISE_STREAM, TRANSITION_STREAM,
};
use crate::error::{Error, Result};
use crate::learners::Transition;
use crate::mdp::{self, MdpModel, StateDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_states: usize,
    pub gamma: f64,
    pub n_noise: usize,
    pub noise_sigma: f64,
    pub noise_mode: NoiseMode,
    /// Whether the leftmost state also ends the episode (with zero reward).
    /// Otherwise a left move from it is blocked and the walker stays put.
    pub left_terminal: bool,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_states: 7,
            gamma: 0.95,
            n_noise: 10,
            noise_sigma: 0.5,
            noise_mode: NoiseMode::PerVisit,
            left_terminal: true,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 3 {
            return Err(Error::Config(format!(
                "chain needs at least 3 states, got {}",
                self.n_states
            )));
        }
        validate_gamma(self.gamma)?;
        validate_sigma(self.noise_sigma)
    }

    pub fn center(&self) -> usize {
        self.n_states / 2
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        s == self.n_states - 1 || (self.left_terminal && s == 0)
    }

    /// Number of binary-encoding columns, `⌈log₂ n⌉`.
    pub fn n_bits(&self) -> usize {
        (usize::BITS - (self.n_states - 1).leading_zeros()) as usize
    }
}

/// Builds the exact chain model and a sampler for it.
///
/// Interior states step left or right with probability ½. Entering the right
/// end pays 1 and ends the episode; every other reward is 0. Terminal states
/// are absorbing in the model, have all-zero features, and restart at the
/// center for the stationary distribution.
pub fn build_chain(cfg: &ChainConfig) -> Result<(Environment, ChainSampler)> {
    cfg.validate()?;
    let n = cfg.n_states;
    let right = n - 1;
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        if cfg.is_terminal(s) {
            p[(s, s)] = 1.0;
            continue;
        }
        let left = if s == 0 { 0 } else { s - 1 };
        p[(s, left)] += 0.5;
        p[(s, s + 1)] += 0.5;
        if s + 1 == right {
            r[s] = 0.5;
        }
    }

    let bits = cfg.n_bits();
    let mut base = DMatrix::zeros(n, bits);
    for s in (0..n).filter(|&s| !cfg.is_terminal(s)) {
        for b in 0..bits {
            base[(s, b)] = ((s >> b) & 1) as f64;
        }
    }
    let noisy: Vec<bool> = (0..n).map(|s| !cfg.is_terminal(s)).collect();
    let features = FeatureScheme::new(
        BaseFeatures::Binary,
        base,
        cfg.n_noise,
        cfg.noise_sigma,
        cfg.noise_mode,
        noisy,
        cfg.seed,
    );

    let model = MdpModel::new(p, r, cfg.gamma, features.model_features())?;
    let restart = StateDistribution::point(n, cfg.center());
    let distribution = mdp::stationary_distribution(&model, &restart)?;
    let expectations = features.expectations(&model, &distribution)?;
    let sampler = ChainSampler {
        cfg: cfg.clone(),
        features: features.clone(),
        moves: stream_rng(cfg.seed, TRANSITION_STREAM),
        noise: stream_rng(cfg.seed, NOISE_STREAM),
        position: None,
        phi: DVector::zeros(features.dim()),
    };
    let env = Environment {
        behavior: model.clone(),
        target: model,
        distribution,
        features,
        expectations,
        policies: None,
    };
    Ok((env, sampler))
}

/// Episodic sampler: each episode starts at the center and runs until a
/// terminal state is entered.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    cfg: ChainConfig,
    features: FeatureScheme,
    moves: ChaCha8Rng,
    noise: ChaCha8Rng,
    /// `None` between episodes.
    position: Option<usize>,
    /// Features of the current state, drawn on arrival.
    phi: DVector<f64>,
}

impl ChainSampler {
    /// Abandons any episode in progress; the next step starts at the center.
    pub fn reset(&mut self) {
        self.position = None;
    }

    pub fn position(&self) -> Option<usize> {
        self.position
    }

    /// One episode from the center, cut off after `max_steps` transitions.
    pub fn sample_episode(&mut self, max_steps: usize) -> Vec<Transition> {
        self.reset();
        let mut out = Vec::new();
        for _ in 0..max_steps {
            let (step, t) = self.next_step();
            out.push(t);
            if step.terminal {
                break;
            }
        }
        out
    }

    /// Runs one whole episode, handing each transition to `visit`. Stops
    /// early if `visit` fails or after `max_steps` transitions.
    pub fn run_episode<E>(
        &mut self,
        max_steps: usize,
        buf: &mut Transition,
        mut visit: impl FnMut(&Transition) -> Result<(), E>,
    ) -> Result<usize, E> {
        self.reset();
        for i in 0..max_steps {
            let step = self.next_into(buf);
            visit(buf)?;
            if step.terminal {
                return Ok(i + 1);
            }
        }
        Ok(max_steps)
    }
}

impl Sampler for ChainSampler {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn next_into(&mut self, out: &mut Transition) -> SampledStep {
        let s = match self.position {
            Some(s) => s,
            None => {
                let c = self.cfg.center();
                self.features.fill(c, &mut self.noise, self.phi.as_mut_slice());
                c
            }
        };
        let right: bool = self.moves.random_bool(0.5);
        let next = if right {
            s + 1
        } else if s == 0 {
            0
        } else {
            s - 1
        };
        let terminal = self.cfg.is_terminal(next);
        out.phi.copy_from(&self.phi);
        self.features.fill(next, &mut self.noise, out.phi_next.as_mut_slice());
        out.reward = if next == self.cfg.n_states - 1 { 1.0 } else { 0.0 };
        out.rho = 1.0;
        if terminal {
            self.position = None;
        } else {
            self.position = Some(next);
            self.phi.copy_from(&out.phi_next);
        }
        SampledStep {
            state: s,
            next_state: next,
            terminal,
        }
    }
}
