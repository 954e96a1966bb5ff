//! Benchmarks of the hot paths: herald-statistics enumeration, STIRAP
//! integration, a full repeater shot, and tomography reconstruction.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use maqm_core::memory::{stirap_transfer, StirapPulse};
use maqm_core::photonics::{herald_statistics, DetectionChain};
use maqm_core::protocol::{bell_psi_plus, mix_white_noise, run_shot, NodeConfig, NoiseConfig};
use maqm_core::rng::{stream, Domain};
use maqm_core::tomography::{reconstruct, simulate_counts, MeasurementSetting};
use maqm_core::SourceParams;

fn bench_herald_statistics(c: &mut Criterion) {
    let source = SourceParams::new(0.0417, 3).unwrap();
    let chain = DetectionChain::paper_default();
    c.bench_function("herald_statistics", |b| {
        b.iter(|| herald_statistics(black_box(&source), &chain, &chain))
    });
}

fn bench_stirap_transfer(c: &mut Criterion) {
    let pulse = StirapPulse::paper_default();
    c.bench_function("stirap_transfer", |b| {
        b.iter(|| stirap_transfer(black_box(&pulse), 0.0).unwrap())
    });
}

fn bench_run_shot(c: &mut Criterion) {
    let cfg = NodeConfig::paper_default();
    let noise = NoiseConfig::paper_default();
    let mut shot = 0u64;
    c.bench_function("run_shot", |b| {
        b.iter(|| {
            shot += 1;
            run_shot(black_box(&cfg), &noise, 1, shot).unwrap()
        })
    });
}

fn bench_reconstruct(c: &mut Criterion) {
    let target = bell_psi_plus("s1", "s2");
    let state = mix_white_noise(&target, 0.7);
    let mut rng = stream(1, Domain::Tomography, 0);
    let counts =
        simulate_counts(&state, &MeasurementSetting::all_nine(), 222, &mut rng).unwrap();
    c.bench_function("reconstruct_200_bootstrap", |b| {
        b.iter(|| {
            let mut boot = stream(1, Domain::Bootstrap, 0);
            reconstruct(black_box(&counts), &target, 200, &mut boot).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_herald_statistics,
    bench_stirap_transfer,
    bench_run_shot,
    bench_reconstruct
);
criterion_main!(benches);
