//! Fixtures shared by the criterion benches.

use nalgebra::Vector3;
use orthokin::{CartesianPoint, DesignParameters, JointVector};

pub fn canonical() -> DesignParameters {
    DesignParameters::canonical(1.0).expect("positive leg length")
}

/// Deterministic points spread over the ball of radius `0.4 L` (a Halton
/// sequence in bases 2, 3, 5, folded into the ball).
pub fn sample_points(n: usize) -> Vec<CartesianPoint> {
    fn halton(mut i: usize, base: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    (1..)
        .map(|i| {
            Vector3::new(halton(i, 2), halton(i, 3), halton(i, 5)) * 2.0 - Vector3::repeat(1.0)
        })
        .filter(|v| v.norm() < 1.0)
        .take(n)
        .map(|v| CartesianPoint(v * 0.4))
        .collect()
}

/// Joint vectors of [`sample_points`] on the canonical design.
pub fn sample_joints(n: usize) -> Vec<JointVector> {
    let params = canonical();
    sample_points(n)
        .iter()
        .map(|p| {
            orthokin::inverse_kinematics(p, &params)
                .expect("reachable")
                .rho
        })
        .collect()
}
