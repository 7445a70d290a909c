//! Dense solves with an explicit conditioning check.
//!
//! Every solve that feeds an exact evaluator goes through here so that a
//! rank-deficient feature set surfaces as [`Error::Singular`] instead of
//! being silently regularized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest condition number accepted before a system is reported singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Condition estimate of a symmetric positive semidefinite matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2-norm condition estimate of a general square matrix.
pub fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `m x = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    let condition = spd_condition(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    let chol = m.clone().cholesky().ok_or(Error::Singular { what, condition })?;
    Ok(chol.solve(rhs))
}

/// Inverse of a symmetric positive definite matrix.
pub fn inverse_spd(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let condition = spd_condition(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    let chol = m.clone().cholesky().ok_or(Error::Singular { what, condition })?;
    Ok(chol.inverse())
}

/// Solves `m x = rhs` for a general square `m` via LU.
pub fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    let condition = condition(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    m.clone().lu().solve(rhs).ok_or(Error::Singular { what, condition })
}
