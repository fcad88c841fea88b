//! Cartesian workspace: pointwise feasibility, octree construction,
//! t-connected regions, cross sections, joint-limit synthesis and export.

mod connectivity;
mod export;
mod limits;
mod octree;
mod section;

pub use connectivity::{largest_inscribed_cube, t_connected_regions, InscribedCube};
pub use export::{format_float, write_ply, write_section_csv, WorkspaceSummary};
pub use limits::{synthesize_joint_limits, SynthesizedLimits};
pub use octree::{
    build_octree, default_bounds, Aabb, CellLabel, WorkspaceCell, WorkspaceModel, MIN_DEPTH,
};
pub use section::{cross_section, Axis, SectionGrid};

use serde::Serialize;
use thiserror::Error;

use crate::jacobian::{assemble, KinematicMatrices};
use crate::kinematics::{inverse_kinematics, IkSolution, KinematicsError};
use crate::metrics::{manipulability, PerformancePoint, PsiBounds};
use crate::model::{CartesianPoint, DesignParameters};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("max depth must lie in [3, 12], got {0}")]
    InvalidDepth(u32),
    #[error("analysis bounds are empty or not finite")]
    EmptyBounds,
    #[error("slice offset {offset} lies outside the bounds [{min}, {max}]")]
    OffsetOutOfBounds { offset: f64, min: f64, max: f64 },
    #[error("resolution must be at least {min}, got {got}")]
    InvalidResolution { got: usize, min: usize },
    #[error("feasibility spec is invalid: {0}")]
    InvalidSpec(String),
    #[error("even the isotropic point is infeasible: {0}")]
    DegenerateSpec(Infeasibility),
    #[error("design has no isotropic configuration: {0}")]
    NoIsotropicPoint(String),
}

/// What a point must satisfy to belong to the workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilitySpec {
    pub require_joint_limits: bool,
    /// Reject points assembled in the other sign of `det A` than the
    /// design's reference configuration.
    pub require_assembly_mode: bool,
    pub psi: PsiBounds,
    /// Lower bound on `|det A|/L³` and on `min |η_i|/L`.
    pub singular_margin: f64,
}

impl Default for FeasibilitySpec {
    fn default() -> Self {
        Self {
            require_joint_limits: true,
            require_assembly_mode: true,
            psi: PsiBounds::default(),
            singular_margin: 1e-2,
        }
    }
}

impl FeasibilitySpec {
    pub fn with_psi(mut self, min: f64, max: f64) -> Self {
        self.psi = PsiBounds::new(min, max);
        self
    }

    /// Same spec with the amplification bound lifted; used for maps where
    /// the amplification itself is the quantity of interest.
    pub fn without_psi_bounds(mut self) -> Self {
        self.psi = PsiBounds::new(f64::MIN_POSITIVE, f64::INFINITY);
        self
    }

    pub fn ignoring_joint_limits(mut self) -> Self {
        self.require_joint_limits = false;
        self
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        let PsiBounds { min, max } = self.psi;
        if !(min > 0.0 && min <= 1.0 && max >= 1.0) {
            return Err(WorkspaceError::InvalidSpec(format!(
                "psi bounds must satisfy 0 < min <= 1 <= max, got [{min}, {max}]"
            )));
        }
        if !(self.singular_margin >= 0.0 && self.singular_margin.is_finite()) {
            return Err(WorkspaceError::InvalidSpec(format!(
                "singular margin must be finite and nonnegative, got {}",
                self.singular_margin
            )));
        }
        Ok(())
    }
}

/// First test a point failed.
#[derive(Debug, Error, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    #[error("out of reach of leg {leg}")]
    Unreachable { leg: usize },
    #[error("joint {leg} outside its limits")]
    JointLimit { leg: usize },
    #[error("leg {leg} too close to a serial singularity")]
    SerialMargin { leg: usize },
    #[error("too close to a parallel singularity")]
    ParallelMargin,
    #[error("assembled in the other assembly mode")]
    AssemblyMode,
    #[error("velocity amplification outside bounds")]
    PsiBound,
    #[error("self-collision")]
    Collision,
}

/// Everything evaluated at a feasible point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePoint {
    pub ik: IkSolution,
    pub matrices: KinematicMatrices,
    pub performance: PerformancePoint,
}

/// Self-collision test hook. The Orthoglide's links are not modelled as
/// solids, so the default never reports a collision.
pub trait CollisionModel: Sync {
    fn collides(&self, p: &CartesianPoint, ik: &IkSolution) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoCollisions;

impl CollisionModel for NoCollisions {
    fn collides(&self, _p: &CartesianPoint, _ik: &IkSolution) -> bool {
        false
    }
}

pub fn classify_point(
    p: &CartesianPoint,
    params: &DesignParameters,
    spec: &FeasibilitySpec,
) -> Result<FeasiblePoint, Infeasibility> {
    classify_point_with(p, params, spec, &NoCollisions)
}

pub fn is_feasible(p: &CartesianPoint, params: &DesignParameters, spec: &FeasibilitySpec) -> bool {
    classify_point(p, params, spec).is_ok()
}

pub fn classify_point_with(
    p: &CartesianPoint,
    params: &DesignParameters,
    spec: &FeasibilitySpec,
    collisions: &dyn CollisionModel,
) -> Result<FeasiblePoint, Infeasibility> {
    let ik = inverse_kinematics(p, params).map_err(|e| match e {
        KinematicsError::Unreachable { leg } => Infeasibility::Unreachable { leg },
        _ => Infeasibility::Unreachable { leg: 0 },
    })?;
    if spec.require_joint_limits {
        if let Some(leg) = (0..3).find(|&i| !params.joint_limits[i].contains(ik.rho.0[i])) {
            return Err(Infeasibility::JointLimit { leg });
        }
    }
    // IK output always closes, so assembly cannot fail on residuals.
    let matrices = assemble(p, &ik, params).map_err(|_| Infeasibility::ParallelMargin)?;
    let l = params.leg_length;
    if let Some(leg) = (0..3).find(|&i| {
        let eta = matrices.eta[i].abs() / l;
        eta.is_nan() || eta <= spec.singular_margin
    }) {
        return Err(Infeasibility::SerialMargin { leg });
    }
    let det = matrices.normalized_det_a().abs();
    if det.is_nan() || det <= spec.singular_margin {
        return Err(Infeasibility::ParallelMargin);
    }
    if spec.require_assembly_mode && !params.assembly_mode().admits(matrices.det_a) {
        return Err(Infeasibility::AssemblyMode);
    }
    let performance = manipulability(&matrices).map_err(|_| Infeasibility::ParallelMargin)?;
    if !performance.within(&spec.psi, params.tolerances.geom_eps) {
        return Err(Infeasibility::PsiBound);
    }
    if collisions.collides(p, &ik) {
        return Err(Infeasibility::Collision);
    }
    Ok(FeasiblePoint {
        ik,
        matrices,
        performance,
    })
}
