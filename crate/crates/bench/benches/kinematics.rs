use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Matrix3;
use orthokin::{assemble, forward_kinematics, inverse_kinematics, manipulability, symmetric_eigen};
use orthokin_bench::{canonical, sample_joints, sample_points};

fn position(c: &mut Criterion) {
    let params = canonical();
    let points = sample_points(256);
    let joints = sample_joints(256);
    c.bench_function("inverse_kinematics x256", |b| {
        b.iter(|| {
            for p in &points {
                black_box(inverse_kinematics(black_box(p), &params).unwrap());
            }
        })
    });
    c.bench_function("forward_kinematics x256", |b| {
        b.iter(|| {
            for rho in &joints {
                black_box(forward_kinematics(black_box(rho), &params).unwrap());
            }
        })
    });
}

fn differential(c: &mut Criterion) {
    let params = canonical();
    let points = sample_points(256);
    c.bench_function("jacobian + manipulability x256", |b| {
        b.iter(|| {
            for p in &points {
                let ik = inverse_kinematics(p, &params).unwrap();
                let m = assemble(p, &ik, &params).unwrap();
                black_box(manipulability(&m).ok());
            }
        })
    });
    let m = Matrix3::new(2.0, -0.3, 0.1, -0.3, 1.5, 0.4, 0.1, 0.4, 0.7);
    c.bench_function("symmetric_eigen 3x3", |b| {
        b.iter(|| black_box(symmetric_eigen(black_box(&m))))
    });
}

criterion_group!(benches, position, differential);
criterion_main!(benches);
