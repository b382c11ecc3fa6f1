use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qnum_core::model::{build_topology, link_classes};
use qnum_core::solver::{finite_diff_gradient, grid_search_oracle, solve};
use qnum_core::utility::aggregate_objective;
use qnum_core::{Execution, SolverConfig, TopologyKind, UtilityKind};

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_oracle");
    group.sample_size(10);
    let spec = build_topology(TopologyKind::ThreeLink, 100.0).unwrap();
    let classes = link_classes(TopologyKind::ThreeLink, 100.0).unwrap();
    for (name, execution) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(name, 1000), &execution, |b, &execution| {
            b.iter(|| grid_search_oracle(black_box(&spec), UtilityKind::De, &classes, 1000, execution).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_sweep");
    group.sample_size(10);
    let config = SolverConfig::default();
    let instances: Vec<_> = (1..=12)
        .flat_map(|n| UtilityKind::ALL.map(|kind| (build_topology(TopologyKind::ClientsServer, n as f64).unwrap(), kind)))
        .collect();
    for (name, execution) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| execution.map(&instances, |(spec, kind)| solve(spec, *kind, &config).unwrap().objective))
        });
    }
    group.finish();
}

fn gradient_checks(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_difference_gradients");
    let specs: Vec<_> = (2..=24)
        .step_by(2)
        .map(|n| build_topology(TopologyKind::Dumbbell, n as f64).unwrap())
        .collect();
    let points: Vec<_> = specs
        .iter()
        .map(|spec| qnum_core::solver::initialize(spec, UtilityKind::Skf).unwrap())
        .collect();
    let work: Vec<usize> = (0..specs.len()).collect();
    for (name, execution) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                execution.map(&work, |&i| {
                    let f = |x: &_| aggregate_objective(&specs[i], UtilityKind::Skf, x);
                    finite_diff_gradient(f, &points[i], 1e-6).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, oracle, sweep, gradient_checks);
criterion_main!(benches);
