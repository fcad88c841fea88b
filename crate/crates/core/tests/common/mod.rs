//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use orthokin::{assemble, inverse_kinematics, CartesianPoint, DesignParameters, KinematicMatrices};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn canonical(l: f64) -> DesignParameters {
    DesignParameters::canonical(l).unwrap()
}

/// Uniform sample of the open ball of radius `r` centred at the origin.
pub fn point_in_ball(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if v.norm_squared() < 1.0 {
            return v * r;
        }
    }
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Configuration at least `margin` away from both singularity types, in
/// normalized determinant and normalized `|η_i|`.
pub fn regular_configuration(
    rng: &mut ChaCha8Rng,
    params: &DesignParameters,
    margin: f64,
) -> (CartesianPoint, KinematicMatrices) {
    let l = params.leg_length;
    loop {
        let p = CartesianPoint(point_in_ball(rng, 0.6 * l));
        let Ok(ik) = inverse_kinematics(&p, params) else {
            continue;
        };
        let m = assemble(&p, &ik, params).unwrap();
        let ok = m.normalized_det_a().abs() > margin
            && m.eta.iter().all(|e| e.abs() / l > margin)
            && params.assembly_mode().admits(m.det_a);
        if ok {
            return (p, m);
        }
    }
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric 3×3 matrix,
/// ascending. Independent of the closed-form solver under test.
pub fn jacobi_eigenvalues(m: &Matrix3<f64>) -> [f64; 3] {
    let mut a = *m;
    for _sweep in 0..100 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= 1e-300 || off.sqrt() <= 1e-18 * a.norm() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[(p, q)] == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = Matrix3::identity();
            r[(p, p)] = c;
            r[(q, q)] = c;
            r[(p, q)] = s;
            r[(q, p)] = -s;
            a = r.transpose() * a * r;
        }
    }
    let mut v = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
    v.sort_by(f64::total_cmp);
    v
}

/// Random symmetric matrix with entries in [-1, 1].
pub fn random_symmetric(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
