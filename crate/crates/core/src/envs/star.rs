//! Baird's star: off-policy evaluation of the "dotted" policy from data
//! gathered by a behavior policy that sometimes jumps to the center.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    sample_index, stream_rng, validate_gamma, validate_sigma, BaseFeatures, Environment, FeatureScheme, NoiseMode,
    SampledStep, Sampler, NOISE_STREAM, TRANSITION_STREAM,
};
use crate::error::{Error, Result};
use crate::learners::Transition;
use crate::mdp::{self, MdpModel, PolicyPair, PolicyRole, StateDistribution};

pub const SOLID: usize = 0;
pub const DOTTED: usize = 1;

/// Where the dotted action leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DottedTarget {
    /// Uniformly to one of the outer states.
    #[default]
    Outer,
    /// Uniformly to any state other than the current one.
    OtherStates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarConfig {
    pub n_outer: usize,
    pub gamma: f64,
    pub n_noise: usize,
    pub noise_sigma: f64,
    pub noise_mode: NoiseMode,
    pub dotted: DottedTarget,
    pub seed: u64,
}

impl Default for StarConfig {
    fn default() -> Self {
        Self {
            n_outer: 6,
            gamma: 0.95,
            n_noise: 20,
            noise_sigma: 0.5,
            noise_mode: NoiseMode::PerVisit,
            dotted: DottedTarget::Outer,
            seed: 0,
        }
    }
}

impl StarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_outer < 2 {
            return Err(Error::Config(format!(
                "star needs at least 2 outer states, got {}",
                self.n_outer
            )));
        }
        validate_gamma(self.gamma)?;
        validate_sigma(self.noise_sigma)
    }

    pub fn n_states(&self) -> usize {
        self.n_outer + 1
    }

    pub fn center(&self) -> usize {
        self.n_outer
    }
}

/// Builds the behavior and target models of the star plus a sampler that
/// follows the behavior policy and reports importance ratios.
///
/// Solid always moves to the center; behavior picks it with probability
/// `1/(n_outer + 1)`, the target never does. All rewards are zero, so the
/// target value function is identically zero.
pub fn build_star(cfg: &StarConfig) -> Result<(Environment, StarSampler)> {
    cfg.validate()?;
    let n = cfg.n_states();
    let center = cfg.center();

    let mut solid = DMatrix::zeros(n, n);
    let mut dotted = DMatrix::zeros(n, n);
    for s in 0..n {
        solid[(s, center)] = 1.0;
        let dest: Vec<usize> = match cfg.dotted {
            DottedTarget::Outer => (0..cfg.n_outer).collect(),
            DottedTarget::OtherStates => (0..n).filter(|&t| t != s).collect(),
        };
        let p = 1.0 / dest.len() as f64;
        for t in dest {
            dotted[(s, t)] = p;
        }
    }
    let p_solid = 1.0 / n as f64;
    let mut behavior = DMatrix::zeros(n, 2);
    let mut target = DMatrix::zeros(n, 2);
    for s in 0..n {
        behavior[(s, SOLID)] = p_solid;
        behavior[(s, DOTTED)] = 1.0 - p_solid;
        target[(s, DOTTED)] = 1.0;
    }
    let pair = PolicyPair::new(behavior, target, vec![solid, dotted])?;

    let features = FeatureScheme::new(
        BaseFeatures::Tabular,
        DMatrix::identity(n, n),
        cfg.n_noise,
        cfg.noise_sigma,
        cfg.noise_mode,
        vec![true; n],
        cfg.seed,
    );
    let phi = features.model_features();
    let reward = DVector::zeros(n);
    let behavior_model = MdpModel::new(
        mdp::compose_policy(&pair, PolicyRole::Behavior),
        reward.clone(),
        cfg.gamma,
        phi.clone(),
    )?;
    let target_model = MdpModel::new(mdp::compose_policy(&pair, PolicyRole::Target), reward, cfg.gamma, phi)?;
    let distribution = mdp::stationary_distribution(&behavior_model, &StateDistribution::uniform(n))?;
    let expectations = features.expectations(&target_model, &distribution)?;

    let mut moves = stream_rng(cfg.seed, TRANSITION_STREAM);
    let start = sample_index(distribution.as_vector().iter(), moves.random::<f64>());
    let mut noise = stream_rng(cfg.seed, NOISE_STREAM);
    let mut current = DVector::zeros(features.dim());
    features.fill(start, &mut noise, current.as_mut_slice());
    let sampler = StarSampler {
        pair: pair.clone(),
        features: features.clone(),
        moves,
        noise,
        state: start,
        phi: current,
    };
    let env = Environment {
        behavior: behavior_model,
        target: target_model,
        distribution,
        features,
        expectations,
        policies: Some(pair),
    };
    Ok((env, sampler))
}

/// Continuing sampler following the behavior policy.
#[derive(Debug, Clone)]
pub struct StarSampler {
    pair: PolicyPair,
    features: FeatureScheme,
    moves: ChaCha8Rng,
    noise: ChaCha8Rng,
    state: usize,
    phi: DVector<f64>,
}

impl StarSampler {
    pub fn state(&self) -> usize {
        self.state
    }

    /// Exactly `max_steps` consecutive transitions.
    pub fn sample_episode(&mut self, max_steps: usize) -> Vec<Transition> {
        (0..max_steps).map(|_| self.next_step().1).collect()
    }
}

impl Sampler for StarSampler {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn next_into(&mut self, out: &mut Transition) -> SampledStep {
        let s = self.state;
        let behavior = self.pair.policy(PolicyRole::Behavior);
        let action = sample_index(behavior.row(s).iter(), self.moves.random::<f64>());
        let next = sample_index(self.pair.kernel(action).row(s).iter(), self.moves.random::<f64>());
        out.phi.copy_from(&self.phi);
        self.features.fill(next, &mut self.noise, out.phi_next.as_mut_slice());
        out.reward = 0.0;
        out.rho = self.pair.importance_ratio(s, action);
        self.state = next;
        self.phi.copy_from(&out.phi_next);
        SampledStep {
            state: s,
            next_state: next,
            terminal: false,
        }
    }
}
