use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mhsets::fields::{signed_distance_with, Grid, Shape};
use mhsets::par::Exec;
use mhsets::predicate::{fixtures, restricted_max_with, Quadratic, TestFunction};
use mhsets::varifold::{self, mass_with, Region};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn signed_distance(c: &mut Criterion) {
    let grid = Grid::cube(3, 1.25, 48).unwrap();
    let shape = Shape::Union {
        parts: vec![Shape::sphere(vec![-0.4, 0.0, 0.0], 0.5), Shape::sphere(vec![0.4, 0.0, 0.0], 0.5)],
    };
    let mut g = c.benchmark_group("signed_distance_48^3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| signed_distance_with(black_box(&shape), &grid, exec).unwrap())
        });
    }
    g.finish();
}

fn restricted_max(c: &mut Criterion) {
    let z = fixtures::sphere(3, 1.0, 20_000).unwrap();
    let f = TestFunction::quadratic(
        Quadratic::new(vec![0.1, 0.0, 0.0], vec![0.3, -0.2, 0.5], mhsets::linalg::SymForm::from_diag(&[1.0, -2.0, 0.5]), 0.0)
            .unwrap(),
    );
    let mut g = c.benchmark_group("restricted_max_sphere_20k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| restricted_max_with(black_box(&f), &z, exec).unwrap())
        });
    }
    g.finish();
}

fn varifold_mass(c: &mut Criterion) {
    let s = varifold::fixtures::octasphere(1.0, 6).unwrap();
    let region = Region::ball(vec![0.3, 0.0, 0.2], 0.8);
    let mut g = c.benchmark_group("mass_octasphere_level6");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| mass_with(black_box(&s), &region, exec)));
    }
    g.finish();
}

criterion_group!(benches, signed_distance, restricted_max, varifold_mass);
criterion_main!(benches);
