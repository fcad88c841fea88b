//! Machine geometry: design parameters, tolerances, the canonical zero-offset
//! Orthoglide and the JSON machine-definition file.
//!
//! Every leg is a prismatic slider moving along a rail `a_i + ρ_i e_i` and a
//! parallelogram link of length `L` from the slider `b_i` to the platform
//! point `c_i`. The platform attachment points all coincide with the tool
//! point `p`, so the leg constraint reads `‖p − a_i − ρ_i e_i‖ = L`.

use std::fmt;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tool point `p` of the mobile platform, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint(pub Vector3<f64>);

impl CartesianPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn origin() -> Self {
        Self(Vector3::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vector3<f64>> for CartesianPoint {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}

impl From<[f64; 3]> for CartesianPoint {
    fn from(v: [f64; 3]) -> Self {
        Self(Vector3::from(v))
    }
}

/// Actuated joint coordinates `ρ = (ρ₁, ρ₂, ρ₃)`, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointVector(pub Vector3<f64>);

impl JointVector {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Self {
        Self(Vector3::new(r1, r2, r3))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vector3<f64>> for JointVector {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}

impl From<[f64; 3]> for JointVector {
    fn from(v: [f64; 3]) -> Self {
        Self(Vector3::from(v))
    }
}

/// Working mode of one leg: the sign of the square-root branch of its
/// inverse kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum BranchSign {
    Positive,
    Negative,
}

impl BranchSign {
    pub fn value(self) -> f64 {
        match self {
            BranchSign::Positive => 1.0,
            BranchSign::Negative => -1.0,
        }
    }
}

impl From<BranchSign> for i8 {
    fn from(s: BranchSign) -> i8 {
        match s {
            BranchSign::Positive => 1,
            BranchSign::Negative => -1,
        }
    }
}

impl TryFrom<i8> for BranchSign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(BranchSign::Positive),
            -1 => Ok(BranchSign::Negative),
            other => Err(format!("branch sign must be +1 or -1, got {other}")),
        }
    }
}

/// Stroke of one prismatic joint. Unbounded ends are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRange {
    pub min: f64,
    pub max: f64,
}

impl JointRange {
    pub const UNBOUNDED: JointRange = JointRange {
        min: f64::NEG_INFINITY,
        max: f64::INFINITY,
    };

    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn is_bounded(&self) -> bool {
        self.min.is_finite() || self.max.is_finite()
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.min && rho <= self.max
    }
}

impl Default for JointRange {
    fn default() -> Self {
        Self::UNBOUNDED
    }
}

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Dimensionless tolerance for geometric tests (unit norms, orthogonality).
    pub geom_eps: f64,
    /// Threshold on determinants normalized by `L³` (and `η_i` by `L`).
    pub singular_det_eps: f64,
    /// Loop-closure residual tolerance, meters.
    pub residual_eps: f64,
    /// Iteration cap for the Newton fallback of the forward kinematics.
    pub iter_max: u32,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            geom_eps: 1e-10,
            singular_det_eps: 1e-9,
            residual_eps: 1e-9,
            iter_max: 50,
        }
    }
}

/// Sign of `det A` that identifies the assembly mode the design works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyMode {
    NegativeDeterminant,
    PositiveDeterminant,
}

impl AssemblyMode {
    pub fn from_sign(det: f64) -> Self {
        if det < 0.0 {
            AssemblyMode::NegativeDeterminant
        } else {
            AssemblyMode::PositiveDeterminant
        }
    }

    /// `true` when a determinant of this sign belongs to the mode. Zero is
    /// accepted by both modes.
    pub fn admits(self, det: f64) -> bool {
        match self {
            AssemblyMode::NegativeDeterminant => det <= 0.0,
            AssemblyMode::PositiveDeterminant => det >= 0.0,
        }
    }
}

/// Machine definition. Immutable once built; share it freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParameters {
    pub leg_length: f64,
    pub rail_axes: [Vector3<f64>; 3],
    pub rail_anchors: [Vector3<f64>; 3],
    pub branch_signs: [BranchSign; 3],
    pub joint_limits: [JointRange; 3],
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("leg length must be positive and finite, got {0}")]
    NonPositiveLegLength(f64),
    #[error("design has no isotropic configuration: {0}")]
    NoIsotropicConfiguration(String),
    #[error("invalid machine definition: {0}")]
    Invalid(ValidationReport),
    #[error("cannot read machine file: {0}")]
    Io(String),
    #[error("cannot parse machine file: {0}")]
    Parse(String),
}

impl DesignParameters {
    /// Zero-offset Orthoglide: rails along the Cartesian axes, anchored at
    /// the origin, positive working mode, no joint limits.
    pub fn canonical(leg_length: f64) -> Result<Self, ModelError> {
        if !(leg_length > 0.0 && leg_length.is_finite()) {
            return Err(ModelError::NonPositiveLegLength(leg_length));
        }
        Ok(Self {
            leg_length,
            rail_axes: [Vector3::x(), Vector3::y(), Vector3::z()],
            rail_anchors: [Vector3::zeros(); 3],
            branch_signs: [BranchSign::Positive; 3],
            joint_limits: [JointRange::UNBOUNDED; 3],
            tolerances: ToleranceConfig::default(),
        })
    }

    pub fn with_joint_limits(mut self, limits: [JointRange; 3]) -> Self {
        self.joint_limits = limits;
        self
    }

    pub fn with_branch_signs(mut self, signs: [BranchSign; 3]) -> Self {
        self.branch_signs = signs;
        self
    }

    pub fn has_joint_limits(&self) -> bool {
        self.joint_limits.iter().any(JointRange::is_bounded)
    }

    /// Matrix whose rows are the rail axes.
    pub fn rail_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[
            self.rail_axes[0].transpose(),
            self.rail_axes[1].transpose(),
            self.rail_axes[2].transpose(),
        ])
    }

    /// Slider position `b_i = a_i + ρ_i e_i`.
    pub fn slider_position(&self, leg: usize, rho: f64) -> Vector3<f64> {
        self.rail_anchors[leg] + self.rail_axes[leg] * rho
    }

    /// Assembly mode of the reference configuration where every link is
    /// aligned with its rail (`c_i − b_i = −s_i L e_i`). There
    /// `det A = −L³ · s₁s₂s₃ · det E`.
    pub fn assembly_mode(&self) -> AssemblyMode {
        let signs: f64 = self.branch_signs.iter().map(|s| s.value()).product();
        AssemblyMode::from_sign(-signs * self.rail_matrix().determinant())
    }

    pub fn validate(&self) -> ValidationReport {
        let eps = self.tolerances.geom_eps;
        let mut violations = Vec::new();
        if !(self.leg_length > 0.0 && self.leg_length.is_finite()) {
            violations.push(Violation::NonPositiveLegLength(self.leg_length));
        }
        for (i, axis) in self.rail_axes.iter().enumerate() {
            if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() >= eps {
                violations.push(Violation::AxisNotUnit { leg: i });
            }
        }
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            if self.rail_axes[i].dot(&self.rail_axes[j]).abs() >= eps {
                violations.push(Violation::AxesNotOrthogonal {
                    first: i,
                    second: j,
                });
            }
        }
        for (i, anchor) in self.rail_anchors.iter().enumerate() {
            if !anchor.iter().all(|v| v.is_finite()) {
                violations.push(Violation::NonFiniteAnchor { leg: i });
            }
        }
        for (i, range) in self.joint_limits.iter().enumerate() {
            if range.min.is_nan() || range.max.is_nan() || range.min >= range.max {
                violations.push(Violation::EmptyJointRange { leg: i });
            }
        }
        let t = &self.tolerances;
        let positive = [t.geom_eps, t.singular_det_eps, t.residual_eps]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || t.iter_max == 0 {
            violations.push(Violation::NonPositiveTolerance);
        }
        ValidationReport { violations }
    }

    /// Tool point and joint values at which the links are mutually
    /// orthogonal and aligned with their rails, so that the inverse
    /// Jacobian is the identity.
    ///
    /// Requires the anchors to agree on the coordinates they share: the
    /// `e_j` component of `p*` is fixed by every anchor `a_i` with `i ≠ j`.
    pub fn isotropic_configuration(&self) -> Result<(CartesianPoint, JointVector), ModelError> {
        let report = self.validate();
        if !report.is_empty() {
            return Err(ModelError::Invalid(report));
        }
        let tol = self
            .tolerances
            .residual_eps
            .max(self.tolerances.geom_eps * self.leg_length);
        let mut coords = Vector3::zeros();
        for j in 0..3 {
            let e = &self.rail_axes[j];
            let others: Vec<f64> = (0..3)
                .filter(|&i| i != j)
                .map(|i| self.rail_anchors[i].dot(e))
                .collect();
            if (others[0] - others[1]).abs() > tol {
                return Err(ModelError::NoIsotropicConfiguration(format!(
                    "anchors of legs other than {} disagree along its rail axis",
                    j
                )));
            }
            coords[j] = 0.5 * (others[0] + others[1]);
        }
        // Rail axes are orthonormal, so E^T maps rail coordinates back.
        let p = self.rail_matrix().transpose() * coords;
        let rho = Vector3::from_fn(|i, _| {
            (p - self.rail_anchors[i]).dot(&self.rail_axes[i])
                + self.branch_signs[i].value() * self.leg_length
        });
        Ok((CartesianPoint(p), JointVector(rho)))
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let file: MachineFile =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        let params = file.into_params()?;
        let report = params.validate();
        if report.is_empty() {
            Ok(params)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_machine_file(&self) -> MachineFile {
        let rows = |v: &[Vector3<f64>; 3]| v.map(|r| [r.x, r.y, r.z]);
        MachineFile {
            leg_length: Some(self.leg_length),
            rail_axes: Some(rows(&self.rail_axes)),
            rail_anchors: Some(rows(&self.rail_anchors)),
            branch_signs: Some(self.branch_signs),
            joint_limits: self.has_joint_limits().then(|| {
                self.joint_limits.map(|r| {
                    [
                        r.min.is_finite().then_some(r.min),
                        r.max.is_finite().then_some(r.max),
                    ]
                })
            }),
            tolerances: Some(self.tolerances),
        }
    }
}

/// On-disk machine definition. Every key is optional; missing keys take the
/// canonical value (`leg_length` defaults to 1 m). Joint-limit ends may be
/// `null` for an unbounded stroke.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineFile {
    #[serde(default)]
    pub leg_length: Option<f64>,
    #[serde(default)]
    pub rail_axes: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub rail_anchors: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub branch_signs: Option<[BranchSign; 3]>,
    #[serde(default)]
    pub joint_limits: Option<[[Option<f64>; 2]; 3]>,
    #[serde(default)]
    pub tolerances: Option<ToleranceConfig>,
}

impl MachineFile {
    pub fn into_params(self) -> Result<DesignParameters, ModelError> {
        let mut params = DesignParameters::canonical(self.leg_length.unwrap_or(1.0))?;
        if let Some(axes) = self.rail_axes {
            params.rail_axes = axes.map(Vector3::from);
        }
        if let Some(anchors) = self.rail_anchors {
            params.rail_anchors = anchors.map(Vector3::from);
        }
        if let Some(signs) = self.branch_signs {
            params.branch_signs = signs;
        }
        if let Some(limits) = self.joint_limits {
            params.joint_limits = limits.map(|[lo, hi]| {
                JointRange::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
            });
        }
        if let Some(tol) = self.tolerances {
            params.tolerances = tol;
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveLegLength(f64),
    AxisNotUnit { leg: usize },
    AxesNotOrthogonal { first: usize, second: usize },
    NonFiniteAnchor { leg: usize },
    EmptyJointRange { leg: usize },
    NonPositiveTolerance,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveLegLength(l) => write!(f, "leg length {l} is not positive"),
            Violation::AxisNotUnit { leg } => write!(f, "rail axis {leg} is not unit-norm"),
            Violation::AxesNotOrthogonal { first, second } => {
                write!(f, "rail axes {first} and {second} are not orthogonal")
            }
            Violation::NonFiniteAnchor { leg } => write!(f, "rail anchor {leg} is not finite"),
            Violation::EmptyJointRange { leg } => {
                write!(f, "joint range of leg {leg} has min >= max")
            }
            Violation::NonPositiveTolerance => write!(f, "tolerances must all be positive"),
        }
    }
}

/// Every invariant a [`DesignParameters`] violates. Empty iff valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}
