use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stl_kernel::formula_gen::{FormulaGenConfig, FormulaGenerator};
use stl_kernel::kernel::{estimate_targets, GramKind, KernelSample, Target};
use stl_kernel::trajectory::{sample_mu0_with, Mu0Config};
use stl_kernel::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus(n: usize) -> Vec<stl_kernel::Formula> {
    FormulaGenerator::new(FormulaGenConfig {
        seed: 1,
        ..Default::default()
    })
    .unwrap()
    .corpus(n)
}

fn bench_mu0(c: &mut Criterion) {
    let cfg = Mu0Config::default();
    let mut group = c.benchmark_group("mu0_sample_10k");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| sample_mu0_with(black_box(&cfg), 10_000, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_gram(c: &mut Criterion) {
    let sample = KernelSample::new(sample_mu0_with(&Mu0Config::default(), 1000, Execution::Parallel).unwrap()).unwrap();
    let formulas = corpus(100);
    let mut group = c.benchmark_group("gram_100x1000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                sample
                    .gram_with(black_box(&formulas), GramKind::Normalized, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_targets(c: &mut Criterion) {
    let trajectories = sample_mu0_with(&Mu0Config::default(), 5000, Execution::Parallel).unwrap();
    let formulas = corpus(50);
    let mut group = c.benchmark_group("targets_50x5000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| estimate_targets(black_box(&formulas), &trajectories, Target::Robustness, 0, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_mu0, bench_gram, bench_targets);
criterion_main!(benches);
