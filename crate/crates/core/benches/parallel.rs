//! Parallel vs sequential kernels on the hot paths: loss/gradient evaluation
//! and the covariance reductions. Built with the `parallel` feature so both
//! code paths exist; the sequential functions are the exact fallback the
//! feature-less build uses.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fairlin_core::boundary::Boundary;
use fairlin_core::ccp::{train_constrained, CcpConfig};
use fairlin_core::constraints::{covariance, covariance_seq, ConstraintSpec, MistreatmentKind};
use fairlin_core::dataset::Dataset;
use fairlin_core::logistic::{nll_and_grad, nll_and_grad_seq};
use fairlin_core::synth::{generate_setting, SyntheticSetting};

fn dataset(n: usize) -> Dataset {
    let full = generate_setting(SyntheticSetting::One, 42).unwrap();
    full.subset(&(0..n).collect::<Vec<_>>()).unwrap()
}

fn bench_nll_grad(c: &mut Criterion) {
    let mut group = c.benchmark_group("nll_and_grad");
    for n in [2_000usize, 10_000] {
        let data = dataset(n);
        let b = Boundary::new(vec![0.7, -0.4, 0.1]).unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |bench, _| {
            bench.iter(|| nll_and_grad(&b, &data, 1e-6).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |bench, _| {
            bench.iter(|| nll_and_grad_seq(&b, &data, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn bench_covariance(c: &mut Criterion) {
    let mut group = c.benchmark_group("covariance");
    for n in [2_000usize, 10_000] {
        let data = dataset(n);
        let b = Boundary::new(vec![0.7, -0.4, 0.1]).unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |bench, _| {
            bench.iter(|| covariance(MistreatmentKind::Fpr, &data, &b).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |bench, _| {
            bench.iter(|| covariance_seq(MistreatmentKind::Fpr, &data, &b).unwrap())
        });
    }
    group.finish();
}

fn bench_constrained_training(c: &mut Criterion) {
    let data = dataset(2_000);
    let spec = ConstraintSpec::with_multiplier(&[MistreatmentKind::Fpr], 0.0).unwrap();
    let mut group = c.benchmark_group("train_constrained");
    group.sample_size(10);
    group.bench_function("setting1_fpr_m0_n2000", |bench| {
        bench.iter(|| train_constrained(&data, &spec, 1e-6, &CcpConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_nll_grad, bench_covariance, bench_constrained_training);
criterion_main!(benches);
