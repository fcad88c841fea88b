//! Condition number, manipulability ellipsoid, velocity and force
//! amplification factors, and isotropy residuals.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::eigen::{symmetric_eigen, symmetric_eigenvalues};
use crate::jacobian::KinematicMatrices;
use crate::kinematics::IkSolution;
use crate::model::DesignParameters;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MetricsError {
    #[error("smallest singular value vanishes; condition number is infinite")]
    InfiniteCondition,
    #[error("configuration is singular")]
    AtSingularity,
}

/// Admissible range of the velocity amplification factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiBounds {
    pub min: f64,
    pub max: f64,
}

impl PsiBounds {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, psi: f64, slack: f64) -> bool {
        psi >= self.min - slack && psi <= self.max + slack
    }
}

impl Default for PsiBounds {
    fn default() -> Self {
        Self {
            min: 1.0 / 3.0,
            max: 3.0,
        }
    }
}

/// Singular values of `M`, descending: square roots of the eigenvalues of
/// `M Mᵀ`.
pub fn singular_values_3x3(m: &Matrix3<f64>) -> [f64; 3] {
    symmetric_eigenvalues(&(m * m.transpose())).map(|v| v.max(0.0).sqrt())
}

/// `κ(M) = √(σ_L / σ_S)`.
pub fn condition_number(m: &Matrix3<f64>) -> Result<f64, MetricsError> {
    let [largest, _, smallest] = singular_values_3x3(m);
    if smallest.is_nan() || smallest <= f64::EPSILON * largest {
        return Err(MetricsError::InfiniteCondition);
    }
    Ok((largest / smallest).sqrt())
}

/// Plain ratio `σ_L / σ_S`, reported next to [`condition_number`] for
/// comparison.
pub fn singular_value_ratio(m: &Matrix3<f64>) -> Result<f64, MetricsError> {
    let [largest, _, smallest] = singular_values_3x3(m);
    if smallest.is_nan() || smallest <= f64::EPSILON * largest {
        return Err(MetricsError::InfiniteCondition);
    }
    Ok(largest / smallest)
}

/// Manipulability ellipsoid and amplification factors at a regular
/// configuration. Principal axes are ordered by decreasing velocity
/// amplification, so `psi` lines up with `singular_values`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerformancePoint {
    /// Singular values of `J`, descending.
    pub singular_values: [f64; 3],
    pub kappa: f64,
    pub singular_value_ratio: f64,
    /// Semi-axis lengths `ξ_k`: square roots of the eigenvalues of `(JJᵀ)⁻¹`.
    pub ellipsoid_axes: [f64; 3],
    /// Unit principal directions, one column per axis.
    #[serde(skip)]
    pub axis_directions: Matrix3<f64>,
    /// Velocity amplification `ψ_k = 1/ξ_k`.
    pub psi: [f64; 3],
    /// Force amplification `φ_k = ξ_k`.
    pub force_factors: [f64; 3],
    /// All `ψ_k` within the default bounds `[1/3, 3]`.
    pub within_bounds: bool,
}

impl PerformancePoint {
    pub fn psi_max(&self) -> f64 {
        self.psi[0]
    }

    pub fn psi_min(&self) -> f64 {
        self.psi[2]
    }

    pub fn within(&self, bounds: &PsiBounds, slack: f64) -> bool {
        self.psi.iter().all(|&p| bounds.contains(p, slack))
    }
}

pub fn manipulability(m: &KinematicMatrices) -> Result<PerformancePoint, MetricsError> {
    let (Some(j), Some(j_inv)) = (m.j, m.j_inv) else {
        return Err(MetricsError::AtSingularity);
    };
    // (J Jᵀ)⁻¹ = J⁻ᵀ J⁻¹
    let inverse_gram = j_inv.transpose() * j_inv;
    let eig = symmetric_eigen(&inverse_gram);
    // eigenvalues descend, so reverse to get ξ ascending and ψ descending
    let order = [2, 1, 0];
    let ellipsoid_axes = order.map(|k| eig.values[k].max(0.0).sqrt());
    if ellipsoid_axes.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(MetricsError::AtSingularity);
    }
    let axis_directions = Matrix3::from_columns(&order.map(|k| eig.vectors.column(k).into_owned()));
    let psi = ellipsoid_axes.map(|x| 1.0 / x);
    let kappa = condition_number(&j).map_err(|_| MetricsError::AtSingularity)?;
    let singular_value_ratio = singular_value_ratio(&j).map_err(|_| MetricsError::AtSingularity)?;
    let bounds = PsiBounds::default();
    Ok(PerformancePoint {
        singular_values: singular_values_3x3(&j),
        kappa,
        singular_value_ratio,
        ellipsoid_axes,
        axis_directions,
        psi,
        force_factors: ellipsoid_axes,
        within_bounds: psi.iter().all(|&p| bounds.contains(p, 0.0)),
    })
}

/// `ṗᵀ (J Jᵀ)⁻¹ ṗ`; at most one exactly when `ṗ` is produced by joint rates
/// of norm at most one.
pub fn ellipsoid_membership(
    m: &KinematicMatrices,
    p_dot: &Vector3<f64>,
) -> Result<f64, MetricsError> {
    if m.j.is_none() {
        return Err(MetricsError::AtSingularity);
    }
    let j_inv = m.j_inv.ok_or(MetricsError::AtSingularity)?;
    Ok((j_inv * p_dot).norm_squared())
}

/// Deviation from the isotropy conditions: equal unit amplification on
/// every leg and mutually orthogonal links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotropyResidual {
    /// `|‖c_i − b_i‖/|η_i| − 1|` per leg.
    pub norm_ratio_residuals: [f64; 3],
    /// `|(c_i − b_i)ᵀ(c_j − b_j)|/L²` for the pairs (0,1), (1,2), (2,0).
    pub orthogonality_residuals: [f64; 3],
}

impl IsotropyResidual {
    pub fn max(&self) -> f64 {
        self.norm_ratio_residuals
            .iter()
            .chain(&self.orthogonality_residuals)
            .fold(
                0.0,
                |acc, &r| if r.is_nan() { f64::NAN } else { acc.max(r) },
            )
    }

    pub fn is_isotropic(&self, eps: f64) -> bool {
        self.max() < eps
    }
}

pub fn isotropy_residual(
    sol: &IkSolution,
    m: &KinematicMatrices,
    params: &DesignParameters,
) -> IsotropyResidual {
    let links: [Vector3<f64>; 3] = std::array::from_fn(|i| sol.legs[i].link());
    let l2 = params.leg_length * params.leg_length;
    let norm_ratio_residuals = std::array::from_fn(|i| {
        let eta = m.eta[i].abs();
        if eta == 0.0 {
            f64::INFINITY
        } else {
            (links[i].norm() / eta - 1.0).abs()
        }
    });
    let pairs = [(0, 1), (1, 2), (2, 0)];
    let orthogonality_residuals = pairs.map(|(i, j)| links[i].dot(&links[j]).abs() / l2);
    IsotropyResidual {
        norm_ratio_residuals,
        orthogonality_residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::assemble;
    use crate::kinematics::inverse_kinematics;
    use crate::model::CartesianPoint;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(a, b, c))
    }

    /// Matrices with a prescribed `J` (and `A = I`, `B = J`).
    fn with_jacobian(j: Matrix3<f64>) -> KinematicMatrices {
        KinematicMatrices {
            a: Matrix3::identity(),
            b: j,
            eta: j.diagonal(),
            j: Some(j),
            j_inv: j.try_inverse(),
            det_a: 1.0,
            det_b: j.determinant(),
            leg_length: 1.0,
        }
    }

    #[test]
    fn singular_values_of_simple_matrices() {
        assert_eq!(singular_values_3x3(&Matrix3::identity()), [1.0; 3]);
        assert_eq!(singular_values_3x3(&diag(2.0, 1.0, 1.0)), [2.0, 1.0, 1.0]);
        assert_eq!(singular_values_3x3(&diag(-3.0, 0.5, 1.0)), [3.0, 1.0, 0.5]);
    }

    #[test]
    fn condition_number_follows_the_square_root_formula() {
        assert_eq!(condition_number(&Matrix3::identity()).unwrap(), 1.0);
        assert_eq!(condition_number(&diag(4.0, 2.0, 1.0)).unwrap(), 2.0);
        assert_eq!(singular_value_ratio(&diag(4.0, 2.0, 1.0)).unwrap(), 4.0);
        assert_eq!(
            condition_number(&diag(1.0, 1.0, 0.0)),
            Err(MetricsError::InfiniteCondition)
        );
        assert_eq!(
            condition_number(&Matrix3::zeros()),
            Err(MetricsError::InfiniteCondition)
        );
    }

    #[test]
    fn manipulability_of_identity() {
        let perf = manipulability(&with_jacobian(Matrix3::identity())).unwrap();
        assert_eq!(perf.ellipsoid_axes, [1.0; 3]);
        assert_eq!(perf.psi, [1.0; 3]);
        assert_eq!(perf.force_factors, [1.0; 3]);
        assert!(perf.within_bounds);
    }

    #[test]
    fn manipulability_of_diagonal_jacobians() {
        let perf = manipulability(&with_jacobian(diag(2.0, 1.0, 1.0))).unwrap();
        assert_eq!(perf.ellipsoid_axes, [0.5, 1.0, 1.0]);
        assert_eq!(perf.psi, [2.0, 1.0, 1.0]);
        assert!(perf.within_bounds);
        // the longest velocity axis is x
        assert_eq!(perf.axis_directions.column(0).abs(), Vector3::x());

        let perf = manipulability(&with_jacobian(diag(4.0, 1.0, 1.0))).unwrap();
        assert!(perf.psi.contains(&4.0));
        assert!(!perf.within_bounds);
    }

    #[test]
    fn manipulability_needs_both_jacobians() {
        let mut m = with_jacobian(Matrix3::identity());
        m.j = None;
        assert_eq!(manipulability(&m), Err(MetricsError::AtSingularity));
        assert_eq!(
            ellipsoid_membership(&m, &Vector3::x()),
            Err(MetricsError::AtSingularity)
        );
    }

    #[test]
    fn membership_at_isotropic_point() {
        let params = DesignParameters::canonical(1.0).unwrap();
        let p = CartesianPoint::origin();
        let sol = inverse_kinematics(&p, &params).unwrap();
        let m = assemble(&p, &sol, &params).unwrap();
        assert_eq!(ellipsoid_membership(&m, &Vector3::zeros()).unwrap(), 0.0);
        for v in [Vector3::x(), Vector3::y(), Vector3::new(0.6, 0.0, 0.8)] {
            assert!((ellipsoid_membership(&m, &v).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn isotropy_residual_vanishes_only_at_isotropy() {
        let params = DesignParameters::canonical(1.0).unwrap();
        let eval = |p: CartesianPoint| {
            let sol = inverse_kinematics(&p, &params).unwrap();
            let m = assemble(&p, &sol, &params).unwrap();
            isotropy_residual(&sol, &m, &params)
        };
        let at_center = eval(CartesianPoint::origin());
        assert!(at_center.max() < 1e-10);
        assert!(at_center.is_isotropic(params.tolerances.geom_eps));

        let off = eval(CartesianPoint::new(0.3, 0.0, 0.0));
        assert!(off.orthogonality_residuals.iter().any(|&r| r > 1e-3));
        assert!(!off.is_isotropic(params.tolerances.geom_eps));
    }

    #[test]
    fn psi_bounds_default() {
        let b = PsiBounds::default();
        assert!(b.contains(1.0 / 3.0, 0.0));
        assert!(b.contains(3.0, 0.0));
        assert!(!b.contains(3.1, 0.0));
        assert!(b.contains(3.0 + 1e-7, 1e-6));
    }
}
