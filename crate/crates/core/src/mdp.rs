//! Explicit finite MDPs under a fixed policy.
//!
//! An [`MdpModel`] is the ground truth the exact evaluators work from: a
//! row-stochastic transition matrix already composed with the policy, the
//! expected immediate reward per state, a discount and the feature matrix
//! whose row `s` is `φ(s)ᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on row sums of stochastic matrices and on probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Stopping threshold for [`stationary_distribution`].
pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
    gamma: f64,
    features: DMatrix<f64>,
}

impl MdpModel {
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>, gamma: f64, features: DMatrix<f64>) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        if transition.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "transition columns",
                expected: n,
                found: transition.ncols(),
            });
        }
        check_stochastic_rows(&transition, "transition")?;
        if reward.len() != n {
            return Err(Error::DimensionMismatch {
                context: "reward length",
                expected: n,
                found: reward.len(),
            });
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("reward"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidModel(format!("discount must lie in [0, 1), got {gamma}")));
        }
        if features.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "feature rows",
                expected: n,
                found: features.nrows(),
            });
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidModel("feature matrix has no columns".into()));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if features.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidModel("feature matrix is identically zero".into()));
        }
        Ok(Self {
            transition,
            reward,
            gamma,
            features,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Same dynamics and rewards with a different feature matrix.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        Self::new(self.transition.clone(), self.reward.clone(), self.gamma, features)
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.transition[(s, s)] == 1.0
    }

    /// `V_θ = Φθ`.
    pub fn value_of(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.features * theta
    }

    /// Bellman operator `T V = r + γ P V`.
    pub fn bellman(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.reward + (&self.transition * v) * self.gamma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution(DVector<f64>);

impl StateDistribution {
    pub fn new(d: DVector<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidModel("empty distribution".into()));
        }
        if d.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidModel("distribution has a negative entry".into()));
        }
        let total = d.sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("distribution sums to {total}, not 1")));
        }
        Ok(Self(d))
    }

    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    /// All mass on `state`.
    pub fn point(n: usize, state: usize) -> Self {
        let mut d = DVector::zeros(n);
        d[state] = 1.0;
        Self(d)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0)
    }
}

impl std::ops::Index<usize> for StateDistribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Action-level dynamics together with a behavior and a target policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPair {
    behavior: DMatrix<f64>,
    target: DMatrix<f64>,
    /// One `n_states × n_states` kernel per action.
    kernels: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyRole {
    Behavior,
    Target,
}

impl PolicyPair {
    pub fn new(behavior: DMatrix<f64>, target: DMatrix<f64>, kernels: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = behavior.nrows();
        let m = behavior.ncols();
        if target.shape() != (n, m) {
            return Err(Error::DimensionMismatch {
                context: "target policy shape",
                expected: n * m,
                found: target.nrows() * target.ncols(),
            });
        }
        if kernels.len() != m {
            return Err(Error::DimensionMismatch {
                context: "number of action kernels",
                expected: m,
                found: kernels.len(),
            });
        }
        for k in &kernels {
            if k.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    context: "action kernel shape",
                    expected: n,
                    found: k.nrows(),
                });
            }
            check_stochastic_rows(k, "action kernel")?;
        }
        check_stochastic_rows(&behavior, "behavior policy")?;
        check_stochastic_rows(&target, "target policy")?;
        for s in 0..n {
            for a in 0..m {
                if target[(s, a)] > 0.0 && behavior[(s, a)] <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "target takes action {a} in state {s} but behavior never does"
                    )));
                }
            }
        }
        Ok(Self {
            behavior,
            target,
            kernels,
        })
    }

    pub fn n_states(&self) -> usize {
        self.behavior.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.behavior.ncols()
    }

    pub fn policy(&self, role: PolicyRole) -> &DMatrix<f64> {
        match role {
            PolicyRole::Behavior => &self.behavior,
            PolicyRole::Target => &self.target,
        }
    }

    pub fn kernel(&self, action: usize) -> &DMatrix<f64> {
        &self.kernels[action]
    }

    /// Importance ratio `target(s,a) / behavior(s,a)`.
    pub fn importance_ratio(&self, state: usize, action: usize) -> f64 {
        let b = self.behavior[(state, action)];
        if b == 0.0 {
            0.0
        } else {
            self.target[(state, action)] / b
        }
    }
}

fn check_stochastic_rows(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for (i, row) in m.row_iter().enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidModel(format!("{what} row {i} has a negative entry")));
        }
        let total = row.sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("{what} row {i} sums to {total}")));
        }
    }
    Ok(())
}

/// Solves the Bellman equation `V = r + γPV` directly.
pub fn true_value_function(model: &MdpModel) -> Result<DVector<f64>> {
    let n = model.n_states();
    let system = DMatrix::identity(n, n) - model.transition() * model.gamma();
    linalg::solve(&system, model.reward(), "I - γP")
}

/// Stationary distribution of the chain where absorbing states jump to `restart`.
///
/// Runs power iteration on the lazy chain `(I + P̃)/2`, which has the same
/// stationary distribution as `P̃` but is aperiodic, and stops once
/// `‖dᵀP̃ − dᵀ‖∞` drops below [`STATIONARY_TOL`].
pub fn stationary_distribution(model: &MdpModel, restart: &StateDistribution) -> Result<StateDistribution> {
    let n = model.n_states();
    if restart.len() != n {
        return Err(Error::DimensionMismatch {
            context: "restart distribution",
            expected: n,
            found: restart.len(),
        });
    }
    let p = restart_augmented(model, restart);
    let pt = p.transpose();
    let mut d = DVector::from_element(n, 1.0 / n as f64);
    let mut change = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITERS {
        let next = &pt * &d;
        change = (&next - &d).amax();
        if change < STATIONARY_TOL {
            let total = d.sum();
            return StateDistribution::new(d / total);
        }
        d = (&d + next) * 0.5;
        let total = d.sum();
        d /= total;
    }
    Err(Error::NonConvergence {
        iterations: STATIONARY_MAX_ITERS,
        change,
    })
}

/// `P̃`: the model's transition matrix with absorbing rows replaced by `restart`.
pub fn restart_augmented(model: &MdpModel, restart: &StateDistribution) -> DMatrix<f64> {
    let mut p = model.transition().clone();
    for s in 0..model.n_states() {
        if model.is_absorbing(s) {
            p.row_mut(s).copy_from(&restart.as_vector().transpose());
        }
    }
    p
}

/// TD fixed point `θ* = A⁻¹b` with `A = ΦᵀD(Φ − γPΦ)`, `b = ΦᵀDr`.
pub fn td_fixed_point(model: &MdpModel, d: &StateDistribution) -> Result<DVector<f64>> {
    if d.len() != model.n_states() {
        return Err(Error::DimensionMismatch {
            context: "state distribution",
            expected: model.n_states(),
            found: d.len(),
        });
    }
    let phi = model.features();
    let phi_t_d = phi.transpose() * d.diag();
    let a = &phi_t_d * (phi - (model.transition() * phi) * model.gamma());
    let b = &phi_t_d * model.reward();
    linalg::solve(&a, &b, "TD matrix A")
}

/// `Σ_a policy(s,a) · kernel_a(s, s')`.
pub fn compose_policy(pair: &PolicyPair, role: PolicyRole) -> DMatrix<f64> {
    let n = pair.n_states();
    let pi = pair.policy(role);
    let mut p = DMatrix::zeros(n, n);
    for a in 0..pair.n_actions() {
        let k = pair.kernel(a);
        for s in 0..n {
            let w = pi[(s, a)];
            if w != 0.0 {
                for t in 0..n {
                    p[(s, t)] += w * k[(s, t)];
                }
            }
        }
    }
    p
}
