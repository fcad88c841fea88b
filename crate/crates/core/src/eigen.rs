//! Closed-form eigen-decomposition of symmetric 3×3 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! cubic of the shifted, scaled matrix `(A − qI)/p`, whose roots are
//! `2 cos(φ + 2πk/3)`. Only the best-separated root is trusted: its
//! eigenvector comes from cross products of the rows of `A − λI`, the
//! remaining pair from an exact 2×2 problem on its orthogonal complement,
//! and every eigenvalue is finally read off as a Rayleigh quotient. This
//! keeps full accuracy for (nearly) repeated eigenvalues, where the
//! trigonometric formula alone loses half the digits.

use nalgebra::{Matrix2, Matrix3, Vector3};

/// Eigenvalues in descending order with matching unit eigenvectors stored
/// as the columns of `vectors`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen3 {
    pub values: [f64; 3],
    pub vectors: Matrix3<f64>,
}

fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, descending.
pub fn symmetric_eigenvalues(m: &Matrix3<f64>) -> [f64; 3] {
    symmetric_eigen(m).values
}

/// Roots of the characteristic cubic by the trigonometric formula, as
/// `(largest, smallest)`, or `None` when the matrix is a multiple of the
/// identity to working precision. Only the extreme roots are returned: a
/// root of multiplicity two loses half its digits here, and the extreme
/// root that is simple is always the better-separated one. Expects a
/// matrix of unit scale.
fn extreme_roots(a: &Matrix3<f64>) -> Option<(f64, f64)> {
    let q = a.trace() / 3.0;
    let b = a - Matrix3::identity() * q;
    let p2 = b.norm_squared() / 6.0;
    if p2 <= f64::EPSILON * f64::EPSILON {
        return None;
    }
    let p = p2.sqrt();
    let r = ((b / p).determinant() * 0.5).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    Some((largest, smallest))
}

/// Unit vector spanning the null space of the rank-2 matrix `m`, taken from
/// the largest cross product of its rows.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let r0 = m.row(0).transpose();
    let r1 = m.row(1).transpose();
    let r2 = m.row(2).transpose();
    let crosses = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = crosses
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))?;
    let n = best.norm();
    (n > 0.0).then(|| best / n)
}

/// Some unit vector orthogonal to `v`.
fn any_orthogonal(v: &Vector3<f64>) -> Vector3<f64> {
    let u = if v.x.abs() > v.z.abs() {
        Vector3::new(-v.y, v.x, 0.0)
    } else {
        Vector3::new(0.0, -v.z, v.y)
    };
    u.normalize()
}

pub fn symmetric_eigen(m: &Matrix3<f64>) -> SymmetricEigen3 {
    let a = symmetrize(m);
    let scale = a.amax();
    if scale == 0.0 || !scale.is_finite() {
        return SymmetricEigen3 {
            values: [scale * 0.0; 3],
            vectors: Matrix3::identity(),
        };
    }
    if a[(0, 1)] == 0.0 && a[(0, 2)] == 0.0 && a[(1, 2)] == 0.0 {
        return diagonal(&a);
    }
    // Unit scale keeps the cross products below from overflowing.
    let a = a / scale;
    let Some((largest, smallest)) = extreme_roots(&a) else {
        let q = a.trace() / 3.0 * scale;
        return SymmetricEigen3 {
            values: [q; 3],
            vectors: Matrix3::identity(),
        };
    };

    // Deflate on whichever extreme eigenvalue is farther from the middle one.
    let middle = a.trace() - largest - smallest;
    let lambda = if largest - middle >= middle - smallest {
        largest
    } else {
        smallest
    };
    let v = null_vector(&(a - Matrix3::identity() * lambda)).unwrap_or_else(Vector3::x);
    let u = any_orthogonal(&v);
    let w = v.cross(&u);

    // Restriction of A to span{u, w}; its eigenpairs give the other two.
    let au = a * u;
    let aw = a * w;
    let block = Matrix2::new(u.dot(&au), u.dot(&aw), w.dot(&au), w.dot(&aw));
    let (c, s) = jacobi_rotation(&block);
    let rayleigh = |x: &Vector3<f64>| x.dot(&(a * x));
    let first = u * c + w * s;
    let second = -u * s + w * c;

    let mut pairs = [
        (rayleigh(&v), v),
        (rayleigh(&first), first),
        (rayleigh(&second), second),
    ];
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    SymmetricEigen3 {
        values: pairs.map(|(value, _)| value * scale),
        vectors: Matrix3::from_columns(&pairs.map(|(_, vector)| vector)),
    }
}

fn diagonal(a: &Matrix3<f64>) -> SymmetricEigen3 {
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    SymmetricEigen3 {
        values: order.map(|i| a[(i, i)]),
        vectors: Matrix3::from_columns(&order.map(Vector3::ith_axis).map(|e| e.into_inner())),
    }
}

/// Cosine and sine of the rotation that diagonalizes a symmetric 2×2 block.
fn jacobi_rotation(m: &Matrix2<f64>) -> (f64, f64) {
    let off = m[(0, 1)];
    if off == 0.0 {
        return (1.0, 0.0);
    }
    let theta = (m[(1, 1)] - m[(0, 0)]) / (2.0 * off);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    // The rotation maps the columns (u, w) to eigenvectors of the block.
    (c, -t * c)
}
