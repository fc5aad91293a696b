use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use halfspace_core::estimates::{harnack_quotient, oscillation_decay};
use halfspace_core::operators::{CoefficientField, EllipticityParams, StFn, TransportVelocity};
use halfspace_core::regularize::{smooth_field, BumpKernel};
use halfspace_core::solver::{solve_ivbp, solve_model, Forcing, IvbProblem, SolverConfig};
use halfspace_core::{Grid, SPoint, ScalarField, WeightedMeasure};

fn grid(ns: usize, nt: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, 0.5, nt)).unwrap())
}

fn model_solve(c: &mut Criterion) {
    let v = TransportVelocity::new(1.0).unwrap();
    let f: StFn = Arc::new(|x, _, t| x + t);
    let mut group = c.benchmark_group("solve_model");
    group.sample_size(10);
    for ns in [17, 33, 49] {
        let g = grid(ns, ns);
        let cfg = SolverConfig::with_dt(0.5 / (ns - 1) as f64);
        group.bench_with_input(BenchmarkId::from_parameter(ns), &ns, |b, _| {
            b.iter(|| solve_model(v, Forcing::Zero, f.clone(), f.clone(), 0.0, g.clone(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn random_coefficients_solve(c: &mut Criterion) {
    let params = EllipticityParams::new(0.5, 0.5).unwrap();
    let coeffs = CoefficientField::random(2, 3, params).unwrap();
    let data: StFn = Arc::new(|x, y, _| -x - y[0] * y[0]);
    let problem = IvbProblem::new(coeffs, Forcing::Zero, data.clone(), data);
    let g = grid(33, 17);
    let cfg = SolverConfig::with_dt(1.0 / 32.0);
    let mut group = c.benchmark_group("solve_random");
    group.sample_size(10);
    group.bench_function("33x33x17", |b| b.iter(|| solve_ivbp(&problem, g.clone(), &cfg).unwrap()));
    group.finish();
}

fn estimates(c: &mut Criterion) {
    let g = grid(33, 101);
    let u = ScalarField::sample(g.clone(), |x, y, t| 1.0 + x + 0.5 * y[0] * y[0] + t).unwrap();
    let zero = ScalarField::constant(g, 0.0);
    let mu = WeightedMeasure::new(0.5).unwrap();
    let base = SPoint::new(0.5, vec![0.0], 0.5).unwrap();
    c.bench_function("harnack_quotient", |b| {
        b.iter(|| harnack_quotient(black_box(&u), &zero, 0.5, &[0.0], 0.5, 0.4, &mu).unwrap())
    });
    c.bench_function("oscillation_decay", |b| {
        b.iter(|| oscillation_decay(black_box(&u), &base, 0.4, 3, &zero, &mu, 0.95).unwrap())
    });
}

fn smoothing(c: &mut Criterion) {
    let g = Arc::new(Grid::uniform(2, (0.0, 1.0, 33), (-1.0, 1.0, 33), (0.0, 1.0, 2)).unwrap());
    let kernel = BumpKernel::new(2, 16).unwrap();
    c.bench_function("smooth_field_sqrt", |b| {
        b.iter(|| smooth_field(|x, _, _| x.sqrt(), black_box(1e-3), &kernel, g.clone()).unwrap())
    });
}

criterion_group!(benches, model_solve, random_coefficients_solve, estimates, smoothing);
criterion_main!(benches);
