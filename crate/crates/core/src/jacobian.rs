//! Parallel and serial Jacobians, the kinematic Jacobian and its inverse,
//! and pointwise singularity classification.
//!
//! Differentiating the leg constraints `‖c_i − b_i‖ = L` gives
//! `(c_i − b_i)ᵀ ṗ = (c_i − b_i)ᵀ e_i ρ̇_i`, i.e. `A ṗ = B ρ̇` with the link
//! vectors as rows of `A` and `B = diag(η_i)`. The idle joint rates of the
//! parallelograms drop out of this projection and are never represented.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::kinematics::{loop_closure_residual, IkSolution};
use crate::model::{CartesianPoint, DesignParameters, JointVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicMatrices {
    /// Parallel Jacobian, rows `(c_i − b_i)ᵀ`.
    pub a: Matrix3<f64>,
    /// Serial Jacobian, `diag(η_i)`.
    pub b: Matrix3<f64>,
    pub eta: Vector3<f64>,
    /// `A⁻¹B`; `None` at a parallel singularity.
    pub j: Option<Matrix3<f64>>,
    /// `B⁻¹A`; `None` at a serial singularity.
    pub j_inv: Option<Matrix3<f64>>,
    pub det_a: f64,
    pub det_b: f64,
    /// Leg length the normalized quantities refer to.
    pub leg_length: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobianError {
    #[error("configuration does not close (max residual {0:e} m)")]
    InconsistentConfiguration(f64),
    #[error("configuration is at a parallel singularity")]
    AtParallelSingularity,
    #[error("configuration is at a serial singularity")]
    AtSerialSingularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    Regular,
    ParallelSingular,
    SerialSingular,
    Both,
}

impl SingularityKind {
    pub fn is_parallel(self) -> bool {
        matches!(
            self,
            SingularityKind::ParallelSingular | SingularityKind::Both
        )
    }

    pub fn is_serial(self) -> bool {
        matches!(
            self,
            SingularityKind::SerialSingular | SingularityKind::Both
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    /// Legs whose link is orthogonal to the rail (0-based).
    pub serial_legs: Vec<usize>,
    pub normalized_det_a: f64,
    pub normalized_det_b: f64,
}

impl KinematicMatrices {
    /// Builds the matrices from the three link vectors `c_i − b_i` and the
    /// rail axes. `A` is singular when the links are coplanar (or all
    /// parallel); `B` when some link is orthogonal to its rail.
    pub fn from_links(
        links: [Vector3<f64>; 3],
        rail_axes: &[Vector3<f64>; 3],
        leg_length: f64,
        singular_det_eps: f64,
    ) -> Self {
        let a = Matrix3::from_rows(&[
            links[0].transpose(),
            links[1].transpose(),
            links[2].transpose(),
        ]);
        let eta = Vector3::from_fn(|i, _| links[i].dot(&rail_axes[i]));
        let b = Matrix3::from_diagonal(&eta);
        let det_a = a.determinant();
        let det_b = eta.x * eta.y * eta.z;
        let l = leg_length;

        let j_inv = (eta.iter().all(|e| e.abs() / l >= singular_det_eps)).then(|| {
            Matrix3::from_rows(&[
                (links[0] / eta.x).transpose(),
                (links[1] / eta.y).transpose(),
                (links[2] / eta.z).transpose(),
            ])
        });
        // Solve A J = B column by column instead of forming A⁻¹.
        let j = if det_a.abs() / (l * l * l) >= singular_det_eps {
            a.lu().solve(&b)
        } else {
            None
        };
        Self {
            a,
            b,
            eta,
            j,
            j_inv,
            det_a,
            det_b,
            leg_length,
        }
    }

    pub fn normalized_det_a(&self) -> f64 {
        self.det_a / self.leg_length.powi(3)
    }

    pub fn normalized_det_b(&self) -> f64 {
        self.det_b / self.leg_length.powi(3)
    }

    pub fn is_regular(&self) -> bool {
        self.j.is_some() && self.j_inv.is_some()
    }
}

/// Assembles `A`, `B`, `J = A⁻¹B` and `J⁻¹ = B⁻¹A` at a configuration
/// produced by [`crate::kinematics::inverse_kinematics`].
pub fn assemble(
    p: &CartesianPoint,
    sol: &IkSolution,
    params: &DesignParameters,
) -> Result<KinematicMatrices, JacobianError> {
    let residual = loop_closure_residual(p, &sol.rho, params).amax();
    if residual.is_nan() || residual > params.tolerances.residual_eps {
        return Err(JacobianError::InconsistentConfiguration(residual));
    }
    let links = std::array::from_fn(|i| p.0 - params.slider_position(i, sol.rho.0[i]));
    Ok(KinematicMatrices::from_links(
        links,
        &params.rail_axes,
        params.leg_length,
        params.tolerances.singular_det_eps,
    ))
}

pub fn classify_singularity(m: &KinematicMatrices, params: &DesignParameters) -> SingularityReport {
    let eps = params.tolerances.singular_det_eps;
    let l = m.leg_length;
    let serial_legs: Vec<usize> = (0..3).filter(|&i| m.eta[i].abs() / l < eps).collect();
    let normalized_det_a = m.normalized_det_a();
    let parallel = normalized_det_a.abs() < eps;
    let kind = match (parallel, !serial_legs.is_empty()) {
        (false, false) => SingularityKind::Regular,
        (true, false) => SingularityKind::ParallelSingular,
        (false, true) => SingularityKind::SerialSingular,
        (true, true) => SingularityKind::Both,
    };
    SingularityReport {
        kind,
        serial_legs,
        normalized_det_a,
        normalized_det_b: m.normalized_det_b(),
    }
}

/// Cartesian velocity `ṗ = J ρ̇`.
pub fn velocity_forward(
    m: &KinematicMatrices,
    rho_dot: &JointVector,
) -> Result<Vector3<f64>, JacobianError> {
    m.j.map(|j| j * rho_dot.0)
        .ok_or(JacobianError::AtParallelSingularity)
}

/// Joint rates `ρ̇ = J⁻¹ ṗ`.
pub fn velocity_inverse(
    m: &KinematicMatrices,
    p_dot: &Vector3<f64>,
) -> Result<JointVector, JacobianError> {
    m.j_inv
        .map(|j_inv| JointVector(j_inv * p_dot))
        .ok_or(JacobianError::AtSerialSingularity)
}
