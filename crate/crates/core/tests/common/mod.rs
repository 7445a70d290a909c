//! Reference implementations used as test oracles. Nothing here calls into
//! the evaluators it is meant to check.
#![allow(dead_code)]

use gtd_ist::mdp::{MdpModel, StateDistribution};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random row-stochastic matrix with every entry positive.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.05..1.0));
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}

pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> StateDistribution {
    let d = DVector::from_fn(n, |_, _| rng.random_range(0.1..1.0));
    let s = d.sum();
    StateDistribution::new(d / s).unwrap()
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(rng))
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize, k: usize) -> MdpModel {
    let p = random_stochastic(rng, n);
    let r = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let gamma = rng.random_range(0.5..0.95);
    MdpModel::new(p, r, gamma, random_features(rng, n, k)).unwrap()
}

/// `V ← r + γPV` repeated `iters` times from zero.
pub fn value_iteration(model: &MdpModel, iters: usize) -> DVector<f64> {
    let p = model.transition();
    let r = model.reward();
    let mut v = DVector::zeros(model.n_states());
    for _ in 0..iters {
        let mut next = r.clone();
        for s in 0..model.n_states() {
            let mut acc = 0.0;
            for t in 0..model.n_states() {
                acc += p[(s, t)] * v[t];
            }
            next[s] += model.gamma() * acc;
        }
        v = next;
    }
    v
}

/// Left eigenvector of `p` for eigenvalue 1, normalised to sum 1, by
/// replacing one balance equation with the normalisation constraint.
pub fn left_eigenvector(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut system = p.transpose() - DMatrix::identity(n, n);
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    system.full_piv_lu().solve(&rhs).expect("irreducible chain")
}

/// Replaces absorbing rows of `p` with `restart`.
pub fn with_restart(p: &DMatrix<f64>, restart: &[f64]) -> DMatrix<f64> {
    let mut out = p.clone();
    for s in 0..p.nrows() {
        if p[(s, s)] == 1.0 {
            for t in 0..p.ncols() {
                out[(s, t)] = restart[t];
            }
        }
    }
    out
}

/// Weighted least squares fit of `v` onto the columns of `phi`, returned as
/// fitted values: `argmin_β Σ_s d_s (v_s − φ_sᵀβ)²` via SVD of `√D Φ`.
pub fn wls_fit(phi: &DMatrix<f64>, d: &[f64], v: &DVector<f64>) -> DVector<f64> {
    let n = phi.nrows();
    let mut a = phi.clone();
    let mut y = v.clone();
    for s in 0..n {
        let w = d[s].sqrt();
        a.row_mut(s).scale_mut(w);
        y[s] *= w;
    }
    let beta = a.svd(true, true).solve(&y, 1e-14).unwrap();
    phi * beta
}

/// `½‖V_θ − Π T V_θ‖²_D` straight from the definition, projection by
/// weighted least squares.
pub fn mspbe_by_definition(model: &MdpModel, d: &[f64], theta: &DVector<f64>) -> f64 {
    let v = model.features() * theta;
    let tv = model.reward() + model.transition() * &v * model.gamma();
    let ptv = wls_fit(model.features(), d, &tv);
    0.5 * (0..model.n_states())
        .map(|s| d[s] * (v[s] - ptv[s]).powi(2))
        .sum::<f64>()
}

/// Central differences with step `h`.
pub fn finite_difference(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(theta.len(), |j, _| {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[j] += h;
        minus[j] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// `argmin_y ½(y − x)² + ν|y|` by bisection on the subdifferential
/// `y − x + ν·∂|y|`, which is monotone in `y`.
pub fn prox_scalar_by_bisection(x: f64, nu: f64) -> f64 {
    // 0 ∈ ∂ at y = 0
    if (-x - nu) <= 0.0 && 0.0 <= (-x + nu) {
        return 0.0;
    }
    let slope = |y: f64| y - x + nu * y.signum();
    let (mut lo, mut hi) = if x > 0.0 {
        (0.0, x.abs() + 1.0)
    } else {
        (-x.abs() - 1.0, 0.0)
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean and unbiased variance by the two-pass formula.
pub fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}
