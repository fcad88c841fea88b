//! Kinematic, singularity, performance and workspace analysis of the
//! Orthoglide, a translational 3-axis parallel machine with three
//! orthogonal prismatic actuators and parallelogram legs of equal length.
//!
//! The modules build on each other:
//!
//! - [`model`]: design parameters and the canonical zero-offset machine;
//! - [`kinematics`]: inverse and forward position kinematics;
//! - [`jacobian`]: parallel/serial Jacobians and singularity classification;
//! - [`metrics`]: condition number, manipulability ellipsoid, isotropy;
//! - [`workspace`]: feasibility, octree workspace, connectivity, joint limits.
//!
//! ```
//! use orthokin::{inverse_kinematics, assemble, manipulability, CartesianPoint, DesignParameters};
//!
//! let params = DesignParameters::canonical(1.0).unwrap();
//! let p = CartesianPoint::origin();
//! let ik = inverse_kinematics(&p, &params).unwrap();
//! let m = assemble(&p, &ik, &params).unwrap();
//! let perf = manipulability(&m).unwrap();
//! assert_eq!(perf.psi, [1.0; 3]);
//! ```

pub mod eigen;
pub mod jacobian;
pub mod kinematics;
pub mod metrics;
pub mod model;
pub mod workspace;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen3};
pub use jacobian::{
    assemble, classify_singularity, velocity_forward, velocity_inverse, JacobianError,
    KinematicMatrices, SingularityKind, SingularityReport,
};
pub use kinematics::{
    forward_kinematics, inverse_kinematics, loop_closure_residual, FkSolution, IkSolution,
    KinematicsError, LegState,
};
pub use metrics::{
    condition_number, ellipsoid_membership, isotropy_residual, manipulability,
    singular_value_ratio, singular_values_3x3, IsotropyResidual, MetricsError, PerformancePoint,
    PsiBounds,
};
pub use model::{
    AssemblyMode, BranchSign, CartesianPoint, DesignParameters, JointRange, JointVector,
    MachineFile, ModelError, ToleranceConfig, ValidationReport, Violation,
};
pub use workspace::{
    build_octree, classify_point, cross_section, synthesize_joint_limits, t_connected_regions,
    FeasibilitySpec, Infeasibility, WorkspaceError, WorkspaceModel,
};
