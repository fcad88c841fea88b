use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use super::{classify_point, is_feasible, FeasibilitySpec, WorkspaceError};
use crate::kinematics::forward_kinematics;
use crate::model::{CartesianPoint, DesignParameters, JointRange, JointVector};

const RELATIVE_TOLERANCE: f64 = 1e-3;
/// The search gives up on a positive edge below this fraction of the
/// initial bracket.
const COLLAPSE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesizedLimits {
    /// Edge of the largest admissible cube centred on the isotropic point.
    pub cube_edge: f64,
    pub center: CartesianPoint,
    #[serde(serialize_with = "serialize_ranges")]
    pub limits: [JointRange; 3],
    pub resolution: usize,
}

fn serialize_ranges<S: serde::Serializer>(
    ranges: &[JointRange; 3],
    s: S,
) -> Result<S::Ok, S::Error> {
    ranges.map(|r| [r.min, r.max]).serialize(s)
}

impl SynthesizedLimits {
    /// `false` when the cube collapsed to a point and the limits are empty.
    pub fn is_usable(&self) -> bool {
        self.limits.iter().all(|r| r.min < r.max)
    }

    pub fn apply_to(&self, params: &DesignParameters) -> DesignParameters {
        params.clone().with_joint_limits(self.limits)
    }
}

/// `n` evenly spaced values from `lo` to `hi`, both included.
fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn grid(lo: Vector3<f64>, hi: Vector3<f64>, n: usize) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(n * n * n);
    for x in linspace(lo.x, hi.x, n) {
        for y in linspace(lo.y, hi.y, n) {
            for z in linspace(lo.z, hi.z, n) {
                out.push(Vector3::new(x, y, z));
            }
        }
    }
    out
}

struct Search<'a> {
    params: &'a DesignParameters,
    spec: FeasibilitySpec,
    center: Vector3<f64>,
    resolution: usize,
}

impl Search<'_> {
    fn cube_samples(&self, edge: f64) -> Vec<Vector3<f64>> {
        let h = Vector3::repeat(0.5 * edge);
        grid(self.center - h, self.center + h, self.resolution)
    }

    /// Per-leg joint range over the cube samples, or `None` if some sample
    /// is infeasible.
    fn cube_limits(&self, edge: f64) -> Option<[JointRange; 3]> {
        let rhos: Option<Vec<Vector3<f64>>> = self
            .cube_samples(edge)
            .into_par_iter()
            .map(|p| {
                classify_point(&CartesianPoint(p), self.params, &self.spec)
                    .ok()
                    .map(|f| f.ik.rho.0)
            })
            .collect();
        let rhos = rhos?;
        Some(std::array::from_fn(|i| {
            let (lo, hi) = rhos
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[i]), hi.max(r[i]))
                });
            JointRange::new(lo, hi)
        }))
    }

    /// Every configuration on the joint-space grid of `limits` assembles in
    /// the design's mode and is feasible.
    fn joint_box_feasible(&self, limits: &[JointRange; 3]) -> bool {
        let lo = Vector3::from_fn(|i, _| limits[i].min);
        let hi = Vector3::from_fn(|i, _| limits[i].max);
        grid(lo, hi, self.resolution).into_par_iter().all(|rho| {
            forward_kinematics(&JointVector(rho), self.params)
                .map(|fk| is_feasible(&fk.point, self.params, &self.spec))
                .unwrap_or(false)
        })
    }

    fn admissible(&self, edge: f64) -> Option<[JointRange; 3]> {
        let limits = self.cube_limits(edge)?;
        self.joint_box_feasible(&limits).then_some(limits)
    }
}

/// Joint limits derived from the amplification bound of `spec`.
///
/// Bisects on the edge of a cube centred at the isotropic point. An edge is
/// admissible when all `resolution³` samples of the cube are feasible with
/// joint limits ignored and, taking the per-leg range of `ρ` over those
/// samples as limits, all `resolution³` samples of that joint-space box
/// assemble and are feasible too. The second test keeps singular
/// configurations out of the box even though the cube itself avoids them.
pub fn synthesize_joint_limits(
    params: &DesignParameters,
    spec: &FeasibilitySpec,
    resolution: usize,
) -> Result<SynthesizedLimits, WorkspaceError> {
    spec.validate()?;
    if resolution < 2 {
        return Err(WorkspaceError::InvalidResolution {
            got: resolution,
            min: 2,
        });
    }
    let (center, rho_star) = params
        .isotropic_configuration()
        .map_err(|e| WorkspaceError::NoIsotropicPoint(e.to_string()))?;
    let search = Search {
        params,
        spec: spec.ignoring_joint_limits(),
        center: center.0,
        resolution,
    };
    if let Err(reason) = classify_point(&center, params, &search.spec) {
        return Err(WorkspaceError::DegenerateSpec(reason));
    }

    let collapsed = || SynthesizedLimits {
        cube_edge: 0.0,
        center,
        limits: std::array::from_fn(|i| JointRange::new(rho_star.0[i], rho_star.0[i])),
        resolution,
    };

    // The tool point never leaves a cube of edge 2L around the isotropic point.
    let initial = 2.0 * params.leg_length;
    if let Some(limits) = search.admissible(initial) {
        return Ok(SynthesizedLimits {
            cube_edge: initial,
            center,
            limits,
            resolution,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, initial);
    let mut best = None;
    loop {
        if lo > 0.0 && hi - lo <= RELATIVE_TOLERANCE * lo {
            break;
        }
        if lo == 0.0 && hi <= COLLAPSE_FRACTION * initial {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match search.admissible(mid) {
            Some(limits) => {
                lo = mid;
                best = Some(limits);
            }
            None => hi = mid,
        }
    }
    Ok(match best {
        Some(limits) => SynthesizedLimits {
            cube_edge: lo,
            center,
            limits,
            resolution,
        },
        None => collapsed(),
    })
}
