//! Position-level inverse and forward kinematics.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::model::{CartesianPoint, DesignParameters, JointVector};

/// Anchor `a`, slider `b`, platform attachment `c` and the projection
/// `η = (c − b)ᵀe` of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegState {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub c: Vector3<f64>,
    pub eta: f64,
}

impl LegState {
    /// Link vector `c − b`.
    pub fn link(&self) -> Vector3<f64> {
        self.c - self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub rho: JointVector,
    pub legs: [LegState; 3],
    /// Per leg: the square-root term vanished, so the link is orthogonal to
    /// its rail.
    pub boundary_flags: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkSolution {
    pub point: CartesianPoint,
    /// Both assembly candidates qualified; the one farther from the
    /// origin was returned.
    pub degenerate: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("point is out of reach of leg {leg}")]
    Unreachable { leg: usize },
    #[error("joint values admit no assembly in the design's working mode")]
    NoAssembly,
    #[error("non-finite input")]
    NonFinite,
}

fn leg_states(params: &DesignParameters, p: &Vector3<f64>, rho: &Vector3<f64>) -> [LegState; 3] {
    std::array::from_fn(|i| {
        let a = params.rail_anchors[i];
        let b = params.slider_position(i, rho[i]);
        LegState {
            a,
            b,
            c: *p,
            eta: (p - b).dot(&params.rail_axes[i]),
        }
    })
}

/// Joint values reaching `p` in the design's working mode:
/// `ρ_i = q·e_i + s_i √(L² − ‖q‖² + (q·e_i)²)` with `q = p − a_i`.
pub fn inverse_kinematics(
    p: &CartesianPoint,
    params: &DesignParameters,
) -> Result<IkSolution, KinematicsError> {
    if !p.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    let l2 = params.leg_length * params.leg_length;
    let tol = params.tolerances.residual_eps * params.leg_length;
    let mut rho = Vector3::zeros();
    let mut boundary_flags = [false; 3];
    for i in 0..3 {
        let q = p.0 - params.rail_anchors[i];
        let along = q.dot(&params.rail_axes[i]);
        let radial2 = (q.norm_squared() - along * along).max(0.0);
        let disc = l2 - radial2;
        if disc < -tol {
            return Err(KinematicsError::Unreachable { leg: i });
        }
        boundary_flags[i] = disc <= tol;
        rho[i] = along + params.branch_signs[i].value() * disc.max(0.0).sqrt();
    }
    Ok(IkSolution {
        rho: JointVector(rho),
        legs: leg_states(params, &p.0, &rho),
        boundary_flags,
    })
}

/// Per-leg closure error `‖p − a_i − ρ_i e_i‖ − L`, meters.
pub fn loop_closure_residual(
    p: &CartesianPoint,
    rho: &JointVector,
    params: &DesignParameters,
) -> Vector3<f64> {
    Vector3::from_fn(|i, _| (p.0 - params.slider_position(i, rho.0[i])).norm() - params.leg_length)
}

/// `true` when `p` lies on the IK branch of the design for every leg, i.e.
/// `s_i (ρ_i − (p − a_i)·e_i) ≥ 0` up to tolerance.
fn on_design_branch(p: &Vector3<f64>, rho: &Vector3<f64>, params: &DesignParameters) -> bool {
    let tol = params.tolerances.geom_eps.sqrt() * params.leg_length;
    (0..3).all(|i| {
        let along = (p - params.rail_anchors[i]).dot(&params.rail_axes[i]);
        params.branch_signs[i].value() * (rho[i] - along) >= -tol
    })
}

fn link_matrix(p: &Vector3<f64>, centers: &[Vector3<f64>; 3]) -> Matrix3<f64> {
    Matrix3::from_rows(&[
        (p - centers[0]).transpose(),
        (p - centers[1]).transpose(),
        (p - centers[2]).transpose(),
    ])
}

fn qualifies(
    p: &Vector3<f64>,
    rho: &Vector3<f64>,
    centers: &[Vector3<f64>; 3],
    params: &DesignParameters,
) -> bool {
    let residual_ok = centers
        .iter()
        .all(|c| ((p - c).norm() - params.leg_length).abs() <= params.leg_length * 1e-6);
    residual_ok
        && on_design_branch(p, rho, params)
        && params
            .assembly_mode()
            .admits(link_matrix(p, centers).determinant())
}

/// Platform point for the joint values `ρ`: the intersection of the three
/// spheres of radius `L` centred on the sliders, in the design's working
/// and assembly mode.
///
/// The two candidates sit symmetrically about the plane of the sliders, on
/// the normal through the circumcentre of the slider triangle. When both
/// qualify, the one with the larger `‖p‖²` is returned and flagged.
pub fn forward_kinematics(
    rho: &JointVector,
    params: &DesignParameters,
) -> Result<FkSolution, KinematicsError> {
    if !rho.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    let l = params.leg_length;
    let centers: [Vector3<f64>; 3] = std::array::from_fn(|i| params.slider_position(i, rho.0[i]));
    let d2 = centers[1] - centers[0];
    let d3 = centers[2] - centers[0];
    let n = d2.cross(&d3);
    let n2 = n.norm_squared();
    if n2.sqrt() <= params.tolerances.geom_eps * l * l {
        return newton_fallback(rho, &centers, params);
    }
    let offset = (d3.cross(&n) * d2.norm_squared() + n.cross(&d2) * d3.norm_squared()) / (2.0 * n2);
    let circumcenter = centers[0] + offset;
    let h2 = l * l - offset.norm_squared();
    if h2 < -1e-12 * l * l {
        return Err(KinematicsError::NoAssembly);
    }
    let normal = n * (h2.max(0.0) / n2).sqrt();
    let mut roots = [circumcenter + normal, circumcenter - normal];
    roots.sort_by(|x, y| y.norm_squared().total_cmp(&x.norm_squared()));

    let candidates: Vec<Vector3<f64>> = roots
        .iter()
        .map(|p| polish(*p, &centers, l))
        .filter(|p| qualifies(p, &rho.0, &centers, params))
        .collect();
    match candidates.as_slice() {
        [] => Err(KinematicsError::NoAssembly),
        [only] => Ok(FkSolution {
            point: CartesianPoint(*only),
            degenerate: false,
        }),
        [larger, ..] => Ok(FkSolution {
            point: CartesianPoint(*larger),
            degenerate: (larger - candidates[1]).norm() > params.tolerances.geom_eps * l,
        }),
    }
}

/// Two Newton steps on the squared closure equations, kept only if they help.
fn polish(mut p: Vector3<f64>, centers: &[Vector3<f64>; 3], l: f64) -> Vector3<f64> {
    let residual =
        |p: &Vector3<f64>| Vector3::from_fn(|i, _| 0.5 * ((p - centers[i]).norm_squared() - l * l));
    for _ in 0..2 {
        let f = residual(&p);
        let Some(step) = link_matrix(&p, centers).lu().solve(&f) else {
            break;
        };
        let next = p - step;
        if residual(&next).norm() < f.norm() {
            p = next;
        } else {
            break;
        }
    }
    p
}

/// Damped Newton iteration on the squared closure equations, seeded at the
/// isotropic point. Used when the sliders are collinear and the closed form
/// has no plane to work in.
fn newton_fallback(
    rho: &JointVector,
    centers: &[Vector3<f64>; 3],
    params: &DesignParameters,
) -> Result<FkSolution, KinematicsError> {
    let l = params.leg_length;
    let mut p = params
        .isotropic_configuration()
        .map(|(p, _)| p.0)
        .unwrap_or_else(|_| (centers[0] + centers[1] + centers[2]) / 3.0);
    let residual =
        |p: &Vector3<f64>| Vector3::from_fn(|i, _| 0.5 * ((p - centers[i]).norm_squared() - l * l));
    let target = params.tolerances.residual_eps * l;
    let mut f = residual(&p);
    for _ in 0..params.tolerances.iter_max {
        if f.norm() <= target * 1e-3 {
            break;
        }
        let Some(step) = link_matrix(&p, centers).lu().solve(&f) else {
            return Err(KinematicsError::NoAssembly);
        };
        let mut damping = 1.0;
        loop {
            let next = p - step * damping;
            let fn_next = residual(&next);
            if fn_next.norm() < f.norm() || damping < 1e-6 {
                p = next;
                f = fn_next;
                break;
            }
            damping *= 0.5;
        }
    }
    if qualifies(&p, &rho.0, centers, params)
        && loop_closure_residual(&CartesianPoint(p), rho, params).amax()
            <= target.max(params.tolerances.residual_eps)
    {
        Ok(FkSolution {
            point: CartesianPoint(p),
            degenerate: false,
        })
    } else {
        Err(KinematicsError::NoAssembly)
    }
}
