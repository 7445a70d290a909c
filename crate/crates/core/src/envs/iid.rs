//! Independent `(s, s′)` draws from an exact model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{sample_index, stream_rng, SampledStep, Sampler, TRANSITION_STREAM};
use crate::error::{Error, Result};
use crate::learners::Transition;
use crate::mdp::{MdpModel, StateDistribution};

/// Draws `s ~ d`, then `s′ ~ P(s, ·)`, and emits `(φ(s), r(s), φ(s′))`.
///
/// Sample averages of the emitted transitions converge to the model's exact
/// expectations under `d`, which makes this the reference stream for
/// unbiasedness checks.
#[derive(Debug, Clone)]
pub struct IidSampler {
    model: MdpModel,
    d: StateDistribution,
    rng: ChaCha8Rng,
}

impl IidSampler {
    pub fn new(model: MdpModel, d: StateDistribution, seed: u64) -> Result<Self> {
        if d.len() != model.n_states() {
            return Err(Error::DimensionMismatch {
                context: "state distribution",
                expected: model.n_states(),
                found: d.len(),
            });
        }
        Ok(Self {
            model,
            d,
            rng: stream_rng(seed, TRANSITION_STREAM),
        })
    }
}

impl Sampler for IidSampler {
    fn dim(&self) -> usize {
        self.model.n_features()
    }

    fn next_into(&mut self, out: &mut Transition) -> SampledStep {
        let s = sample_index(self.d.as_vector().iter(), self.rng.random::<f64>());
        let next = sample_index(self.model.transition().row(s).iter(), self.rng.random::<f64>());
        let phi = self.model.features();
        for j in 0..phi.ncols() {
            out.phi[j] = phi[(s, j)];
            out.phi_next[j] = phi[(next, j)];
        }
        out.reward = self.model.reward()[s];
        out.rho = 1.0;
        SampledStep {
            state: s,
            next_state: next,
            terminal: false,
        }
    }
}
