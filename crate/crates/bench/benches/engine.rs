use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use remeta::numerics::{normal_cdf, normal_quantile};
use remeta::*;
use remeta_bench::example_dataset;

fn reference_config() -> AnalysisConfig {
    AnalysisConfig::new(
        EffectPrior::normal(0.0, 4.0).expect("valid prior"),
        HeterogeneityPrior::half_normal(0.5).expect("valid prior"),
    )
}

fn bench_normal_functions(c: &mut Criterion) {
    c.bench_function("normal_cdf", |b| {
        b.iter(|| normal_cdf(black_box(1.3), 0.0, 1.0))
    });
    c.bench_function("normal_quantile", |b| {
        b.iter(|| normal_quantile(black_box(0.975), 0.0, 1.0))
    });
}

fn bench_tau_marginal(c: &mut Criterion) {
    let data = example_dataset();
    let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
    let hprior = HeterogeneityPrior::half_normal(0.5).unwrap();
    c.bench_function("tau_marginal", |b| {
        b.iter(|| tau_marginal(black_box(&data), &eprior, &hprior).unwrap())
    });
}

fn bench_mixture_build(c: &mut Criterion) {
    let data = example_dataset();
    let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
    let hprior = HeterogeneityPrior::half_normal(0.5).unwrap();
    let marginal = tau_marginal(&data, &eprior, &hprior).unwrap();
    c.bench_function("posterior_mixtures", |b| {
        b.iter(|| posterior_mixtures(black_box(&marginal), &DirectConfig::default()).unwrap())
    });
}

fn bench_full_analysis(c: &mut Criterion) {
    let data = example_dataset();
    let config = reference_config();
    c.bench_function("run_analysis", |b| {
        b.iter(|| run_analysis(black_box(&data), &config).unwrap())
    });
}

fn bench_posterior_queries(c: &mut Criterion) {
    let data = example_dataset();
    let result = run_analysis(&data, &reference_config()).unwrap();
    c.bench_function("effect_quantile", |b| {
        b.iter(|| result.quantile(Target::Mu, black_box(0.975)))
    });
    c.bench_function("tau_cdf", |b| {
        b.iter(|| result.cdf(Target::Tau, black_box(0.5)))
    });
}

criterion_group!(
    benches,
    bench_normal_functions,
    bench_tau_marginal,
    bench_mixture_build,
    bench_full_analysis,
    bench_posterior_queries
);
criterion_main!(benches);
