//! Online gradient-TD learners and the batch IST iteration.
//!
//! Every online learner consumes one [`Transition`] at a time. The
//! regularized variants differ from their plain counterparts only by a soft
//! threshold `Ψ_{α_t η}` applied to `θ` after the gradient step:
//!
//! ```text
//! θ ← Ψ_{α_t η}(θ − α_t ∇̃J(θ))
//! ```
//!
//! with the stochastic gradient estimates
//!
//! ```text
//! GTD   ∇̃J₃ = ρ (φᵀu)(γφ′ − φ)        u ← u + β(ρδφ − u)
//! GTD2  ∇̃J₂ = ρ (φᵀw)(γφ′ − φ)        w ← w + β(ρδ − φᵀw)φ
//! TDC   ∇̃J₂ = ρ (γ(φᵀw)φ′ − δφ)       (same w recursion)
//! TD(0) θ ← θ + α ρ δ φ
//! ```
//!
//! Both right-hand sides are evaluated from the time-`t` values before either
//! vector is overwritten.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objectives::{self, ExpectationSet, ObjectiveKind};
use crate::prox::{self, Threshold};

/// Parameters and auxiliary vectors beyond this magnitude count as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub phi: DVector<f64>,
    pub reward: f64,
    pub phi_next: DVector<f64>,
    /// Importance ratio `target(s,a) / behavior(s,a)`; 1 on-policy.
    pub rho: f64,
}

impl Transition {
    pub fn new(phi: DVector<f64>, reward: f64, phi_next: DVector<f64>, rho: f64) -> Result<Self> {
        if phi.len() != phi_next.len() {
            return Err(Error::DimensionMismatch {
                context: "next-state features",
                expected: phi.len(),
                found: phi_next.len(),
            });
        }
        if !reward.is_finite() || phi.iter().chain(phi_next.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("transition"));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidModel(format!(
                "importance ratio {rho} must be finite and >= 0"
            )));
        }
        Ok(Self {
            phi,
            reward,
            phi_next,
            rho,
        })
    }

    pub fn on_policy(phi: DVector<f64>, reward: f64, phi_next: DVector<f64>) -> Result<Self> {
        Self::new(phi, reward, phi_next, 1.0)
    }

    /// All-zero transition of dimension `k`, handy as a reusable buffer.
    pub fn zeros(k: usize) -> Self {
        Self {
            phi: DVector::zeros(k),
            reward: 0.0,
            phi_next: DVector::zeros(k),
            rho: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }
}

/// `δ = r + θᵀ(γφ′ − φ)`.
pub fn td_error(gamma: f64, trans: &Transition, theta: &DVector<f64>) -> Result<f64> {
    if theta.len() != trans.dim() {
        return Err(Error::DimensionMismatch {
            context: "td error",
            expected: trans.dim(),
            found: theta.len(),
        });
    }
    Ok(td_error_unchecked(gamma, trans, theta))
}

#[inline]
fn td_error_unchecked(gamma: f64, trans: &Transition, theta: &DVector<f64>) -> f64 {
    let mut acc = trans.reward;
    for ((t, p), q) in theta.iter().zip(trans.phi.iter()).zip(trans.phi_next.iter()) {
        acc += t * (gamma * q - p);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// `α_t = α / (1 + t·rate)`, and likewise for `β_t`.
    Decaying {
        rate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub beta: f64,
    pub schedule: Schedule,
}

impl StepSizes {
    pub fn constant(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, Schedule::Constant)
    }

    pub fn decaying(alpha: f64, beta: f64, rate: f64) -> Result<Self> {
        Self::new(alpha, beta, Schedule::Decaying { rate })
    }

    /// Step sizes must be positive; `alpha = 0` is accepted as the degenerate
    /// "frozen θ" case.
    pub fn new(alpha: f64, beta: f64, schedule: Schedule) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidStepSizes(format!("alpha = {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidStepSizes(format!("beta = {beta}")));
        }
        if let Schedule::Decaying { rate } = schedule {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidStepSizes(format!("decay rate = {rate}")));
            }
        }
        Ok(Self { alpha, beta, schedule })
    }

    /// `(α_t, β_t)`.
    pub fn at(&self, t: u64) -> (f64, f64) {
        match self.schedule {
            Schedule::Constant => (self.alpha, self.beta),
            Schedule::Decaying { rate } => {
                let scale = 1.0 / (1.0 + t as f64 * rate);
                (self.alpha * scale, self.beta * scale)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Td0,
    Gtd,
    GtdIst,
    Gtd2,
    Gtd2Ist,
    Tdc,
    TdcIst,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Td0,
        AlgorithmKind::Gtd,
        AlgorithmKind::GtdIst,
        AlgorithmKind::Gtd2,
        AlgorithmKind::Gtd2Ist,
        AlgorithmKind::Tdc,
        AlgorithmKind::TdcIst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Td0 => "TD0",
            AlgorithmKind::Gtd => "GTD",
            AlgorithmKind::GtdIst => "GTD_IST",
            AlgorithmKind::Gtd2 => "GTD2",
            AlgorithmKind::Gtd2Ist => "GTD2_IST",
            AlgorithmKind::Tdc => "TDC",
            AlgorithmKind::TdcIst => "TDC_IST",
        }
    }

    pub fn is_ist(self) -> bool {
        matches!(
            self,
            AlgorithmKind::GtdIst | AlgorithmKind::Gtd2Ist | AlgorithmKind::TdcIst
        )
    }

    /// The unregularized algorithm an IST variant wraps.
    pub fn unregularized(self) -> AlgorithmKind {
        match self {
            AlgorithmKind::GtdIst => AlgorithmKind::Gtd,
            AlgorithmKind::Gtd2Ist => AlgorithmKind::Gtd2,
            AlgorithmKind::TdcIst => AlgorithmKind::Tdc,
            other => other,
        }
    }

    pub fn has_aux(self) -> bool {
        self != AlgorithmKind::Td0
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '(', ')'], "_");
        let norm = norm.trim_end_matches('_');
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Everything one online run carries from step to step.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub theta: DVector<f64>,
    /// `u` for GTD, `w` for GTD2/TDC, `None` for TD(0).
    pub aux: Option<DVector<f64>>,
    pub eta: f64,
    pub steps: StepSizes,
    pub t: u64,
}

impl LearnerState {
    /// `θ₀ = theta`, auxiliary vector zero.
    pub fn new(kind: AlgorithmKind, theta: DVector<f64>, eta: f64, steps: StepSizes) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::NegativeEta(eta));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("initial parameters"));
        }
        let aux = kind.has_aux().then(|| DVector::zeros(theta.len()));
        Ok(Self {
            theta,
            aux,
            eta,
            steps,
            t: 0,
        })
    }

    pub fn zeros(kind: AlgorithmKind, k: usize, eta: f64, steps: StepSizes) -> Result<Self> {
        Self::new(kind, DVector::zeros(k), eta, steps)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Number of coordinates of θ with magnitude above `1e-12`.
    pub fn nnz(&self) -> usize {
        count_nonzero(self.theta.as_slice())
    }
}

pub fn count_nonzero(theta: &[f64]) -> usize {
    theta.iter().filter(|x| x.abs() > 1e-12).count()
}

/// An algorithm together with the discount it evaluates under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Learner {
    pub kind: AlgorithmKind,
    pub gamma: f64,
}

impl Learner {
    pub fn new(kind: AlgorithmKind, gamma: f64) -> Self {
        Self { kind, gamma }
    }

    pub fn td_error(&self, trans: &Transition, theta: &DVector<f64>) -> Result<f64> {
        td_error(self.gamma, trans, theta)
    }

    /// Pure form of [`Learner::step_in_place`].
    pub fn step(&self, state: &LearnerState, trans: &Transition) -> Result<LearnerState> {
        let mut next = state.clone();
        self.step_in_place(&mut next, trans)?;
        Ok(next)
    }

    /// Advances `state` by one transition. After a divergence error the
    /// state holds the offending values.
    pub fn step_in_place(&self, state: &mut LearnerState, trans: &Transition) -> Result<()> {
        let k = state.dim();
        if trans.dim() != k {
            return Err(Error::DimensionMismatch {
                context: "learner step",
                expected: k,
                found: trans.dim(),
            });
        }
        let (alpha, beta) = state.steps.at(state.t);
        let gamma = self.gamma;
        let rho = trans.rho;
        let delta = td_error_unchecked(gamma, trans, &state.theta);
        let phi = trans.phi.as_slice();
        let next = trans.phi_next.as_slice();
        let theta = state.theta.as_mut_slice();

        match self.kind {
            AlgorithmKind::Td0 => {
                let scale = alpha * rho * delta;
                for (t, p) in theta.iter_mut().zip(phi) {
                    *t += scale * p;
                }
            }
            AlgorithmKind::Gtd | AlgorithmKind::GtdIst => {
                let u = aux_mut(&mut state.aux)?;
                let pu = dot(phi, u);
                let scale = alpha * rho * pu;
                for j in 0..k {
                    theta[j] -= scale * (gamma * next[j] - phi[j]);
                    u[j] += beta * (rho * delta * phi[j] - u[j]);
                }
            }
            AlgorithmKind::Gtd2 | AlgorithmKind::Gtd2Ist => {
                let w = aux_mut(&mut state.aux)?;
                let pw = dot(phi, w);
                let scale = alpha * rho * pw;
                let aux_scale = beta * (rho * delta - pw);
                for j in 0..k {
                    theta[j] -= scale * (gamma * next[j] - phi[j]);
                    w[j] += aux_scale * phi[j];
                }
            }
            AlgorithmKind::Tdc | AlgorithmKind::TdcIst => {
                let w = aux_mut(&mut state.aux)?;
                let pw = dot(phi, w);
                let aux_scale = beta * (rho * delta - pw);
                for j in 0..k {
                    theta[j] -= alpha * rho * (gamma * pw * next[j] - delta * phi[j]);
                    w[j] += aux_scale * phi[j];
                }
            }
        }

        if self.kind.is_ist() {
            prox::soft_threshold_in_place(theta, Threshold::new(alpha * state.eta)?);
        }
        state.t += 1;

        let mut magnitude = max_abs(state.theta.as_slice());
        if let Some(aux) = &state.aux {
            magnitude = magnitude.max(max_abs(aux.as_slice()));
        }
        if !(magnitude <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                step: state.t,
                magnitude,
            });
        }
        Ok(())
    }
}

fn aux_mut(aux: &mut Option<DVector<f64>>) -> Result<&mut [f64]> {
    aux.as_mut()
        .map(|a| a.as_mut_slice())
        .ok_or(Error::InvalidModel("learner state has no auxiliary vector".into()))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// NaN propagates as NaN so the divergence check catches it.
fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| {
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}

/// One batch IST iteration `Ψ_{αη}(θ − α∇J(θ))` on exact expectations.
pub fn batch_ist_step(
    theta: &DVector<f64>,
    kind: ObjectiveKind,
    exp: &ExpectationSet,
    alpha: f64,
    eta: f64,
) -> Result<DVector<f64>> {
    if !(eta >= 0.0) {
        return Err(Error::NegativeEta(eta));
    }
    let grad = objectives::objective_gradient(kind, theta, exp)?;
    let mut next = theta - grad * alpha;
    prox::soft_threshold_in_place(next.as_mut_slice(), Threshold::new(alpha * eta)?);
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct BatchRun {
    pub theta: DVector<f64>,
    /// `F(θ)` before the first iteration and after each one.
    pub objective: Vec<f64>,
}

/// Runs `iterations` batch IST steps from `theta`, recording the
/// regularized objective along the way.
pub fn batch_ist(
    theta: DVector<f64>,
    kind: ObjectiveKind,
    exp: &ExpectationSet,
    alpha: f64,
    eta: f64,
    iterations: usize,
) -> Result<BatchRun> {
    let mut objective = Vec::with_capacity(iterations + 1);
    objective.push(objectives::regularized_value(kind, &theta, eta, exp)?);
    let mut theta = theta;
    for _ in 0..iterations {
        theta = batch_ist_step(&theta, kind, exp, alpha, eta)?;
        objective.push(objectives::regularized_value(kind, &theta, eta, exp)?);
    }
    Ok(BatchRun { theta, objective })
}
