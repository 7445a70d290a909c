//! Exact TD objectives and their gradients.
//!
//! Everything here is computed from the expectations
//!
//! * `A = E[φ(γφ′ − φ)ᵀ]`
//! * `C = E[φφᵀ]`
//! * `b = E[rφ]`
//!
//! so that the expected TD update is `g(θ) = E[δ_θ φ] = b + Aθ`. With those:
//!
//! | objective | value              | gradient      |
//! |-----------|--------------------|---------------|
//! | MSBE      | `½‖V_θ − TV_θ‖²_D` | `Mᵀ D (r + Mθ)`, `M = γPΦ − Φ` |
//! | MSPBE     | `½ gᵀ C⁻¹ g`       | `Aᵀ C⁻¹ g`    |
//! | NEU       | `½ gᵀ g`           | `Aᵀ g`        |

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{MdpModel, StateDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Mean squared Bellman error.
    Msbe,
    /// Mean squared projected Bellman error.
    Mspbe,
    /// Norm of the expected TD update.
    Neu,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::Msbe, ObjectiveKind::Mspbe, ObjectiveKind::Neu];
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Msbe => "MSBE",
            ObjectiveKind::Mspbe => "MSPBE",
            ObjectiveKind::Neu => "NEU",
        })
    }
}

/// State-level terms needed for the MSBE, which is not a function of the
/// feature expectations alone.
#[derive(Debug, Clone, PartialEq)]
struct BellmanTerms {
    weights: DVector<f64>,
    reward: DVector<f64>,
    /// `γPΦ − Φ`
    residual_map: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationSet {
    /// `E[φ(γφ′ − φ)ᵀ]`
    pub a_cross: DMatrix<f64>,
    /// `E[φφᵀ]`
    pub c_gram: DMatrix<f64>,
    /// `E[rφ]`
    pub b_vec: DVector<f64>,
    bellman: Option<BellmanTerms>,
}

impl ExpectationSet {
    /// Builds a set directly from its three moments. MSBE is unavailable on
    /// such a set.
    pub fn from_moments(a_cross: DMatrix<f64>, c_gram: DMatrix<f64>, b_vec: DVector<f64>) -> Result<Self> {
        let k = b_vec.len();
        for (m, what) in [(&a_cross, "A"), (&c_gram, "C")] {
            if m.shape() != (k, k) {
                return Err(Error::DimensionMismatch {
                    context: if what == "A" { "A_cross shape" } else { "C_gram shape" },
                    expected: k,
                    found: m.nrows(),
                });
            }
        }
        if a_cross
            .iter()
            .chain(c_gram.iter())
            .chain(b_vec.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("expectation set"));
        }
        Ok(Self {
            a_cross,
            c_gram,
            b_vec,
            bellman: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.b_vec.len()
    }

    /// Appends `n_noise` feature coordinates that are i.i.d. `N(0, variance)`
    /// per state visit on a set of states with total probability `mass` and
    /// zero elsewhere. Such features are uncorrelated with everything else
    /// and with their own next-state draw, so they contribute the diagonal
    /// blocks `C = variance·mass·I` and `A = −variance·mass·I`.
    pub fn with_noise_block(&self, n_noise: usize, variance: f64, mass: f64) -> Self {
        let k = self.dim();
        let total = k + n_noise;
        let mut a = DMatrix::zeros(total, total);
        let mut c = DMatrix::zeros(total, total);
        let mut b = DVector::zeros(total);
        a.view_mut((0, 0), (k, k)).copy_from(&self.a_cross);
        c.view_mut((0, 0), (k, k)).copy_from(&self.c_gram);
        b.rows_mut(0, k).copy_from(&self.b_vec);
        for j in k..total {
            a[(j, j)] = -variance * mass;
            c[(j, j)] = variance * mass;
        }
        Self {
            a_cross: a,
            c_gram: c,
            b_vec: b,
            bellman: None,
        }
    }

    /// `g(θ) = E[δ_θ φ] = b + Aθ`.
    pub fn expected_td_update(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.b_vec + &self.a_cross * theta
    }

    fn check_dim(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: self.dim(),
                found: theta.len(),
            });
        }
        Ok(())
    }
}

pub fn expectations(model: &MdpModel, d: &StateDistribution) -> Result<ExpectationSet> {
    if d.len() != model.n_states() {
        return Err(Error::DimensionMismatch {
            context: "state distribution",
            expected: model.n_states(),
            found: d.len(),
        });
    }
    let phi = model.features();
    let phi_t_d = phi.transpose() * d.diag();
    let residual_map = (model.transition() * phi) * model.gamma() - phi;
    let a_cross = &phi_t_d * &residual_map;
    let mut c_gram = &phi_t_d * phi;
    // exact symmetry; the two triangles differ only by rounding
    c_gram = (&c_gram + c_gram.transpose()) * 0.5;
    let b_vec = &phi_t_d * model.reward();
    Ok(ExpectationSet {
        a_cross,
        c_gram,
        b_vec,
        bellman: Some(BellmanTerms {
            weights: d.as_vector().clone(),
            reward: model.reward().clone(),
            residual_map,
        }),
    })
}

/// The `D`-orthogonal projector `Φ(ΦᵀDΦ)⁻¹ΦᵀD` onto the feature span.
pub fn projector(model: &MdpModel, d: &StateDistribution) -> Result<DMatrix<f64>> {
    let phi = model.features();
    let phi_t_d = phi.transpose() * d.diag();
    let gram = &phi_t_d * phi;
    let inv = linalg::inverse_spd(&gram, "feature Gram matrix")?;
    Ok(phi * inv * phi_t_d)
}

/// Unregularized TD solution, the zero of `g(θ)`.
pub fn td_solution(exp: &ExpectationSet) -> Result<DVector<f64>> {
    linalg::solve(&exp.a_cross, &(-&exp.b_vec), "TD matrix A")
}

pub fn objective_value(kind: ObjectiveKind, theta: &DVector<f64>, exp: &ExpectationSet) -> Result<f64> {
    exp.check_dim(theta)?;
    let value = match kind {
        ObjectiveKind::Msbe => {
            let bt = exp.bellman.as_ref().ok_or(Error::MsbeUnavailable)?;
            let res = &bt.reward + &bt.residual_map * theta;
            0.5 * res.iter().zip(bt.weights.iter()).map(|(r, w)| w * r * r).sum::<f64>()
        }
        ObjectiveKind::Mspbe => {
            let g = exp.expected_td_update(theta);
            let x = linalg::solve_spd(&exp.c_gram, &g, "feature Gram matrix")?;
            0.5 * g.dot(&x)
        }
        ObjectiveKind::Neu => {
            let g = exp.expected_td_update(theta);
            0.5 * g.dot(&g)
        }
    };
    Ok(value.max(0.0))
}

pub fn objective_gradient(kind: ObjectiveKind, theta: &DVector<f64>, exp: &ExpectationSet) -> Result<DVector<f64>> {
    exp.check_dim(theta)?;
    match kind {
        ObjectiveKind::Msbe => {
            let bt = exp.bellman.as_ref().ok_or(Error::MsbeUnavailable)?;
            let res = &bt.reward + &bt.residual_map * theta;
            let weighted = res.component_mul(&bt.weights);
            Ok(bt.residual_map.transpose() * weighted)
        }
        ObjectiveKind::Mspbe => {
            let g = exp.expected_td_update(theta);
            let x = linalg::solve_spd(&exp.c_gram, &g, "feature Gram matrix")?;
            Ok(exp.a_cross.transpose() * x)
        }
        ObjectiveKind::Neu => {
            let g = exp.expected_td_update(theta);
            Ok(exp.a_cross.transpose() * g)
        }
    }
}

/// Root of the unhalved MSPBE, `‖V_θ − ΠTV_θ‖_D`, so `rmspbe² = 2·J₂`.
pub fn rmspbe(theta: &DVector<f64>, exp: &ExpectationSet) -> Result<f64> {
    Ok((2.0 * objective_value(ObjectiveKind::Mspbe, theta, exp)?).sqrt())
}

/// `F(θ) = J(θ) + η‖θ‖₁`.
pub fn regularized_value(kind: ObjectiveKind, theta: &DVector<f64>, eta: f64, exp: &ExpectationSet) -> Result<f64> {
    if !(eta >= 0.0) {
        return Err(Error::NegativeEta(eta));
    }
    Ok(objective_value(kind, theta, exp)? + eta * theta.lp_norm(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state() -> MdpModel {
        let p = DMatrix::from_row_slice(3, 3, &[0.1, 0.6, 0.3, 0.5, 0.0, 0.5, 0.2, 0.2, 0.6]);
        let r = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1.0, 0.0, 2.0]);
        MdpModel::new(p, r, 0.7, phi).unwrap()
    }

    #[test]
    fn point_mass_gram_is_outer_product() {
        let m = three_state();
        let exp = expectations(&m, &StateDistribution::point(3, 1)).unwrap();
        let phi = m.features().row(1).transpose();
        assert!((&exp.c_gram - &phi * phi.transpose()).amax() < 1e-15);
    }

    #[test]
    fn zero_discount_cross_is_negative_gram() {
        let m = three_state();
        let m0 = MdpModel::new(m.transition().clone(), m.reward().clone(), 0.0, m.features().clone()).unwrap();
        let exp = expectations(&m0, &StateDistribution::uniform(3)).unwrap();
        assert!((&exp.a_cross + &exp.c_gram).amax() < 1e-15);
    }

    #[test]
    fn tabular_projector_is_identity() {
        let m = three_state().with_features(DMatrix::identity(3, 3)).unwrap();
        let pi = projector(&m, &StateDistribution::uniform(3)).unwrap();
        assert!((pi - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn constant_feature_projects_onto_weighted_mean() {
        let m = three_state().with_features(DMatrix::from_element(3, 1, 1.0)).unwrap();
        let d = StateDistribution::new(DVector::from_vec(vec![0.2, 0.3, 0.5])).unwrap();
        let pi = projector(&m, &d).unwrap();
        let v = DVector::from_vec(vec![3.0, -1.0, 2.0]);
        let pv = &pi * &v;
        let mean = 0.2 * 3.0 - 0.3 + 0.5 * 2.0;
        for x in pv.iter() {
            assert!((x - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn objectives_vanish_at_td_solution() {
        let m = three_state();
        let exp = expectations(&m, &StateDistribution::uniform(3)).unwrap();
        let star = td_solution(&exp).unwrap();
        for kind in [ObjectiveKind::Mspbe, ObjectiveKind::Neu] {
            assert!(objective_value(kind, &star, &exp).unwrap() < 1e-12);
            assert!(objective_gradient(kind, &star, &exp).unwrap().amax() < 1e-10);
        }
        assert!(rmspbe(&star, &exp).unwrap() < 1e-6);
    }

    #[test]
    fn scalar_gradients_by_hand() {
        // k = 1: A = a, C = c, b = b
        let exp = ExpectationSet::from_moments(
            DMatrix::from_element(1, 1, -0.4),
            DMatrix::from_element(1, 1, 2.0),
            DVector::from_element(1, 0.3),
        )
        .unwrap();
        let theta = DVector::from_element(1, 1.5);
        let g = 0.3 - 0.4 * 1.5;
        let neu = objective_gradient(ObjectiveKind::Neu, &theta, &exp).unwrap();
        assert!((neu[0] - (-0.4 * g)).abs() < 1e-15);
        let mspbe = objective_gradient(ObjectiveKind::Mspbe, &theta, &exp).unwrap();
        assert!((mspbe[0] - (-0.4 * g / 2.0)).abs() < 1e-15);
        assert!(matches!(
            objective_value(ObjectiveKind::Msbe, &theta, &exp),
            Err(Error::MsbeUnavailable)
        ));
    }

    #[test]
    fn tabular_msbe_equals_mspbe() {
        let m = three_state().with_features(DMatrix::identity(3, 3)).unwrap();
        let exp = expectations(&m, &StateDistribution::uniform(3)).unwrap();
        let theta = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let j1 = objective_value(ObjectiveKind::Msbe, &theta, &exp).unwrap();
        let j2 = objective_value(ObjectiveKind::Mspbe, &theta, &exp).unwrap();
        assert!((j1 - j2).abs() < 1e-12);
    }

    #[test]
    fn regularized_value_edges() {
        let m = three_state();
        let exp = expectations(&m, &StateDistribution::uniform(3)).unwrap();
        let theta = DVector::from_vec(vec![0.5, -2.0]);
        for kind in ObjectiveKind::ALL {
            let j = objective_value(kind, &theta, &exp).unwrap();
            assert_eq!(regularized_value(kind, &theta, 0.0, &exp).unwrap(), j);
            let zero = DVector::zeros(2);
            assert_eq!(
                regularized_value(kind, &zero, 3.0, &exp).unwrap(),
                objective_value(kind, &zero, &exp).unwrap()
            );
        }
        assert!(matches!(
            regularized_value(ObjectiveKind::Neu, &theta, -1.0, &exp),
            Err(Error::NegativeEta(_))
        ));
    }

    #[test]
    fn dependent_features_have_no_projector() {
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let m = three_state().with_features(phi).unwrap();
        assert!(matches!(
            projector(&m, &StateDistribution::uniform(3)),
            Err(Error::Singular { .. })
        ));
    }
}
