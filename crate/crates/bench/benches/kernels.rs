use std::hint::black_box;

use cortical::homogenization::{
    axis_stencil, sample_operator, solve_mean_value_dirichlet_with, MeanValueOptions,
};
use cortical::{
    apply, gaussian_smooth, pinwheel_map, solve, Boundary, CoefficientField, GaussianParams,
    GridGeometry, HeterogeneousOperator, PinwheelParams, ScalarField, SolverConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn field(g: &GridGeometry) -> ScalarField {
    ScalarField::from_fn(*g, |x, y| (x * 0.37).sin() + (y * 0.21).cos())
}

fn mixed_operator(n: usize) -> HeterogeneousOperator {
    let g = GridGeometry::unit(n, n).unwrap();
    let theta = pinwheel_map(&g, &PinwheelParams::for_geometry(&g, 1)).unwrap();
    let c = CoefficientField::new(
        ScalarField::new(g, 0.5),
        ScalarField::new(g, 0.3),
        ScalarField::new(g, 0.2),
    )
    .unwrap();
    HeterogeneousOperator::new(theta, c, 2).unwrap()
}

fn operator_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_apply");
    for n in [32, 64, 128] {
        let op = mixed_operator(n);
        let u = field(op.geometry());
        group.bench_with_input(BenchmarkId::new("stencil", n), &n, |b, _| {
            b.iter(|| apply(black_box(&op), black_box(&u)).unwrap())
        });
        let m = op.matrix();
        let mut y = vec![0.0; n * n];
        group.bench_with_input(BenchmarkId::new("csr", n), &n, |b, _| {
            b.iter(|| m.mul_vec(black_box(u.values()), &mut y))
        });
        let banded = op.banded();
        let up = banded.pad(u.values());
        let mut out = vec![0.0; banded.padded_len()];
        group.bench_with_input(BenchmarkId::new("banded", n), &n, |b, _| {
            b.iter(|| banded.apply_padded(black_box(&up), &mut out))
        });
    }
    group.finish();
}

fn solver_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver_1000_steps");
    group.sample_size(20);
    for n in [32, 64] {
        let op = mixed_operator(n);
        let f = field(op.geometry());
        let u0 = ScalarField::zeros(*op.geometry());
        let cfg = SolverConfig::new(1e-3, 1e-300, 1000, Boundary::Neumann, false).unwrap();
        op.banded();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve(&op, black_box(&f), &u0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn gaussian(c: &mut Criterion) {
    let g = GridGeometry::unit(256, 256).unwrap();
    let u = field(&g);
    let params = GaussianParams::default();
    c.bench_function("gaussian_smooth_256", |b| {
        b.iter(|| gaussian_smooth(black_box(&u), &params))
    });
}

fn mean_value_jacobi(c: &mut Criterion) {
    let op = sample_operator(0.5, 1.0, 1.0 / 16.0, 1, &axis_stencil()).unwrap();
    let g = op.geometry();
    let f = ScalarField::from_fn(g, |_, _| 1.0);
    let options = MeanValueOptions {
        tolerance: 1e-300,
        max_iterations: 200,
        ..MeanValueOptions::default()
    };
    c.bench_function("mean_value_jacobi_200", |b| {
        b.iter(|| {
            let r = solve_mean_value_dirichlet_with(&op, black_box(&f), &g, &options);
            black_box(r.is_err())
        })
    });
}

criterion_group!(
    benches,
    operator_apply,
    solver_steps,
    gaussian,
    mean_value_jacobi
);
criterion_main!(benches);
