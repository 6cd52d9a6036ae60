use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spreach::hj::{solve_full_value, solve_reduced_value, Axis, Grid, PayoffFn, SolveOptions};
use spreach::systems::{genetic_circuit, hamiltonian_minmax, mrn, MrnNetwork};

fn hamiltonian(c: &mut Criterion) {
    let circuit = genetic_circuit(1.0).unwrap().reduce();
    c.bench_function("hamiltonian/genetic_circuit", |b| {
        b.iter(|| hamiltonian_minmax(&circuit, black_box(&[0.5]), black_box(&[1.0])).unwrap())
    });
    let net = MrnNetwork::random(20, 0).unwrap();
    let red = mrn(net).unwrap().system.reduce();
    c.bench_function("hamiltonian/mrn20", |b| {
        b.iter(|| {
            hamiltonian_minmax(
                &red,
                black_box(&[0.2, 0.3, 0.4]),
                black_box(&[0.1, -1.0, 0.5]),
            )
            .unwrap()
        })
    });
}

fn reduced_solve(c: &mut Criterion) {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let ell = PayoffFn::target_box(&[0.25], &[0.75], 10.0, 3.0, &[]).unwrap();
    let mut group = c.benchmark_group("reduced_solve/genetic_circuit");
    for nodes in [101, 401] {
        let grid = Grid::new(vec![Axis::new(0.0, 1.0, nodes)]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &grid, |b, grid| {
            b.iter(|| {
                solve_reduced_value(&red, &ell, grid, -0.5, &SolveOptions::default()).unwrap()
            })
        });
    }
    group.finish();

    let net = MrnNetwork::random(20, 0).unwrap();
    let red = mrn(net).unwrap().system.reduce();
    let ell = PayoffFn::target_box(&[0.0, 0.4, 0.4], &[1.0, 0.6, 0.6], 10.0, 4.0, &[0]).unwrap();
    let grid = Grid::new(vec![Axis::new(0.0, 1.0, 21); 3]).unwrap();
    let mut group = c.benchmark_group("reduced_solve/mrn20");
    group.sample_size(10);
    group.bench_function("21^3", |b| {
        b.iter(|| solve_reduced_value(&red, &ell, &grid, -1.0, &SolveOptions::default()).unwrap())
    });
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let sys = genetic_circuit(1.0).unwrap();
    let ell = PayoffFn::target_box(&[0.25], &[0.75], 10.0, 3.0, &[]).unwrap();
    let grid = Grid::new(vec![Axis::new(0.0, 1.0, 51), Axis::new(0.0, 1.0, 51)]).unwrap();
    let mut group = c.benchmark_group("full_solve/genetic_circuit_51x51");
    group.sample_size(10);
    for eps in [1.0, 0.1] {
        group.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, &eps| {
            b.iter(|| {
                solve_full_value(&sys, eps, &ell, &grid, -0.5, &SolveOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, hamiltonian, reduced_solve, full_solve);
criterion_main!(benches);
