use std::hint::black_box;

use corrlab::correlations::{correlation_estimate, CorOptions};
use corrlab::entropy::{hmax_smooth, hmin_conditional};
use corrlab::linalg::{eigh, svd};
use corrlab::protocols::haar_decoupling_experiment;
use corrlab::states::{aklt_mps, expander_purity, expander_state, tfim_groundstate, PurityMode};
use corrlab::RngSeed;
use corrlab_bench::random_state;
use criterion::{criterion_group, criterion_main, Criterion};

fn linear_algebra(c: &mut Criterion) {
    let rho = random_state(&[8, 8], 1);
    c.bench_function("eigh 64", |b| b.iter(|| eigh(black_box(rho.matrix()))));
    c.bench_function("svd 64", |b| b.iter(|| svd(black_box(rho.matrix()))));
}

fn entropies(c: &mut Criterion) {
    let rho = random_state(&[4, 4], 2);
    c.bench_function("hmax_smooth 16", |b| b.iter(|| hmax_smooth(black_box(&rho), 0.1)));
    c.bench_function("hmin sdp 4x4", |b| b.iter(|| hmin_conditional(black_box(&rho), &[0])));
    let big = random_state(&[8, 8], 3);
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("hmin sdp 8x8", |b| b.iter(|| hmin_conditional(black_box(&big), &[0])));
    g.finish();
}

fn correlations(c: &mut Criterion) {
    let rho = random_state(&[4, 4], 4);
    let opts = CorOptions::default();
    c.bench_function("cor estimate 4x4", |b| b.iter(|| correlation_estimate(black_box(&rho), &[0], &opts)));
}

fn states(c: &mut Criterion) {
    let mut g = c.benchmark_group("states");
    g.sample_size(10);
    g.bench_function("tfim groundstate n=10", |b| b.iter(|| tfim_groundstate(black_box(10), 2.0)));
    g.bench_function("aklt dense n=8", |b| {
        b.iter(|| aklt_mps(8).and_then(|m| m.to_chain_state(corrlab::states::Topology::Ring)))
    });
    g.finish();
    let sample = expander_state(2, 4, 4, RngSeed::new(5)).expect("expander");
    c.bench_function("expander purity l=3", |b| {
        b.iter(|| expander_purity(black_box(&sample.channel), 3, PurityMode::Channel))
    });
}

fn protocols(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocols");
    g.sample_size(10);
    g.bench_function("haar decoupling 64x4, 20 samples", |b| {
        b.iter(|| haar_decoupling_experiment(64, 4, 20, RngSeed::new(6)))
    });
    g.finish();
}

criterion_group!(benches, linear_algebra, entropies, correlations, states, protocols);
criterion_main!(benches);
