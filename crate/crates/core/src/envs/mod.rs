//! Benchmark environments as exact models plus seeded samplers.
//!
//! Every environment hands out two things: an [`Environment`] with the exact
//! models and expectations used for evaluation, and a sampler producing the
//! [`Transition`] stream the online learners consume.
//!
//! Randomness for one seed is split into independent ChaCha streams:
//!
//! | stream | use                                  |
//! |--------|--------------------------------------|
//! | 1      | frozen noise feature columns         |
//! | 2      | state transitions and actions        |
//! | 3      | per-visit noise feature draws        |
//!
//! so changing how often one of them is consumed never shifts another.

mod chain;
mod iid;
mod star;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::learners::Transition;
use crate::mdp::{MdpModel, PolicyPair, StateDistribution};
use crate::objectives::{self, ExpectationSet};

pub use chain::{build_chain, ChainConfig, ChainSampler};
pub use iid::IidSampler;
pub use star::{build_star, DottedTarget, StarConfig, StarSampler};

pub(crate) const FEATURE_STREAM: u64 = 1;
pub(crate) const TRANSITION_STREAM: u64 = 2;
pub(crate) const NOISE_STREAM: u64 = 3;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How the Gaussian noise features relate to states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// A fresh `N(0, σ²)` draw on every state visit.
    #[default]
    PerVisit,
    /// One draw per (state, column), fixed for the lifetime of the seed.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFeatures {
    /// `⌈log₂ n⌉` columns holding the bits of the state index.
    Binary,
    /// One indicator column per state.
    Tabular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScheme {
    pub base: BaseFeatures,
    /// `n_states × k_base`; rows of terminal states are zero.
    pub base_matrix: DMatrix<f64>,
    pub n_noise: usize,
    pub noise_sigma: f64,
    pub mode: NoiseMode,
    /// `n_states × n_noise` columns, present in [`NoiseMode::Frozen`].
    pub frozen_noise: Option<DMatrix<f64>>,
    /// States whose feature vector carries noise (all non-terminal states).
    pub noisy_states: Vec<bool>,
}

impl FeatureScheme {
    fn new(
        base: BaseFeatures,
        base_matrix: DMatrix<f64>,
        n_noise: usize,
        noise_sigma: f64,
        mode: NoiseMode,
        noisy_states: Vec<bool>,
        seed: u64,
    ) -> Self {
        let frozen_noise = (mode == NoiseMode::Frozen).then(|| {
            let mut rng = stream_rng(seed, FEATURE_STREAM);
            let n = base_matrix.nrows();
            let mut m = DMatrix::zeros(n, n_noise);
            for s in 0..n {
                for j in 0..n_noise {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if noisy_states[s] {
                        m[(s, j)] = noise_sigma * z;
                    }
                }
            }
            m
        });
        Self {
            base,
            base_matrix,
            n_noise,
            noise_sigma,
            mode,
            frozen_noise,
            noisy_states,
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_matrix.ncols()
    }

    pub fn dim(&self) -> usize {
        self.base_dim() + self.n_noise
    }

    /// Coordinates of θ that belong to noise features.
    pub fn noise_range(&self) -> Range<usize> {
        self.base_dim()..self.dim()
    }

    /// State-indexed feature matrix of the exact model: the base columns,
    /// plus the noise columns when they are frozen.
    pub fn model_features(&self) -> DMatrix<f64> {
        match &self.frozen_noise {
            Some(noise) if self.n_noise > 0 => {
                let n = self.base_matrix.nrows();
                let mut m = DMatrix::zeros(n, self.dim());
                m.view_mut((0, 0), (n, self.base_dim())).copy_from(&self.base_matrix);
                m.view_mut((0, self.base_dim()), (n, self.n_noise)).copy_from(noise);
                m
            }
            _ => self.base_matrix.clone(),
        }
    }

    /// Writes `φ(state)` into `out`, drawing per-visit noise from `rng`.
    pub fn fill(&self, state: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let kb = self.base_dim();
        for (j, o) in out[..kb].iter_mut().enumerate() {
            *o = self.base_matrix[(state, j)];
        }
        let noise = &mut out[kb..];
        match (&self.frozen_noise, self.noisy_states[state]) {
            (_, false) => noise.fill(0.0),
            (Some(frozen), true) => {
                for (j, o) in noise.iter_mut().enumerate() {
                    *o = frozen[(state, j)];
                }
            }
            (None, true) => {
                for o in noise.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = self.noise_sigma * z;
                }
            }
        }
    }

    /// Exact expectations of the full feature vector under `model` and `d`,
    /// where `model` carries [`FeatureScheme::model_features`].
    fn expectations(&self, model: &MdpModel, d: &StateDistribution) -> Result<ExpectationSet> {
        let exp = objectives::expectations(model, d)?;
        if self.mode == NoiseMode::PerVisit && self.n_noise > 0 {
            let mass: f64 = (0..d.len()).filter(|&s| self.noisy_states[s]).map(|s| d[s]).sum();
            Ok(exp.with_noise_block(self.n_noise, self.noise_sigma * self.noise_sigma, mass))
        } else {
            Ok(exp)
        }
    }
}

/// Exact description of one benchmark instance.
#[derive(Debug, Clone)]
pub struct Environment {
    /// Dynamics the sampler follows.
    pub behavior: MdpModel,
    /// Dynamics of the policy being evaluated; equals `behavior` on-policy.
    pub target: MdpModel,
    /// Stationary distribution of the behavior chain with restarts.
    pub distribution: StateDistribution,
    pub features: FeatureScheme,
    /// Target-policy expectations under `distribution`, including noise features.
    pub expectations: ExpectationSet,
    pub policies: Option<PolicyPair>,
}

impl Environment {
    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    /// TD solution of the target policy in the full feature space.
    pub fn td_solution(&self) -> Result<DVector<f64>> {
        objectives::td_solution(&self.expectations)
    }
}

/// Anything that produces a transition stream for the harness.
pub trait Sampler {
    /// Feature dimension of emitted transitions.
    fn dim(&self) -> usize;

    /// Writes the next transition into `out`.
    fn next_into(&mut self, out: &mut Transition) -> SampledStep;

    /// Convenience wrapper over [`Sampler::next_into`].
    fn next_step(&mut self) -> (SampledStep, Transition) {
        let mut t = Transition::zeros(self.dim());
        let step = self.next_into(&mut t);
        (step, t)
    }
}

/// State bookkeeping for one emitted transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledStep {
    pub state: usize,
    pub next_state: usize,
    /// The transition ended an episode.
    pub terminal: bool,
}

/// Draws an index from a probability row.
pub(crate) fn sample_index<'a>(probs: impl Iterator<Item = &'a f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.enumerate() {
        if p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}

pub(crate) fn validate_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!(
            "noise_sigma must be finite and >= 0, got {sigma}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}
