//! Soft thresholding, the proximal operator of `ν‖·‖₁`.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Nonnegative, finite shrinkage amount `ν`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub const ZERO: Threshold = Threshold(0.0);

    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(Self(nu))
        } else {
            Err(Error::InvalidThreshold(nu))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Scalar soft threshold. `|x| = ν` maps to zero.
#[inline]
pub fn shrink(x: f64, nu: f64) -> f64 {
    if x > nu {
        x - nu
    } else if x < -nu {
        x + nu
    } else {
        0.0
    }
}

/// `Ψ_ν(x) = sgn(x) ⊙ max(|x| − ν, 0)`.
pub fn soft_threshold(x: &DVector<f64>, nu: Threshold) -> Result<DVector<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("soft threshold input"));
    }
    let mut out = x.clone();
    soft_threshold_in_place(out.as_mut_slice(), nu);
    Ok(out)
}

/// In-place variant used on the learners' hot path. A zero threshold leaves
/// the slice untouched.
pub fn soft_threshold_in_place(x: &mut [f64], nu: Threshold) {
    let nu = nu.value();
    if nu == 0.0 {
        return;
    }
    for v in x.iter_mut() {
        *v = shrink(*v, nu);
    }
}
