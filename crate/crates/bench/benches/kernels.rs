use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use squeezed_bayes::collective_spin::{squeezing_parameter, OatParams};
use squeezed_bayes::noise::flicker_noise;
use squeezed_bayes::rng::{stream, Lane};
use squeezed_bayes::session::run_trial;
use squeezed_bayes::Posterior;
use squeezed_bayes_bench::phase_session;

fn squeezing(c: &mut Criterion) {
    let p = OatParams::optimal(200, 0.03).unwrap();
    c.bench_function("squeezing_parameter", |b| {
        b.iter(|| squeezing_parameter(black_box(&p)).unwrap())
    });
}

fn posterior_update(c: &mut Criterion) {
    let mut group = c.benchmark_group("posterior_update");
    for nodes in [1024, 4096, 16384] {
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &nodes, |b, &nodes| {
            b.iter_batched(
                || Posterior::uniform_phase(nodes).unwrap(),
                |mut post| {
                    post.update_log(|x| -0.5 * ((x - 0.3) / 0.2).powi(2))
                        .unwrap();
                    post
                },
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn flicker(c: &mut Criterion) {
    c.bench_function("flicker_2^16", |b| {
        b.iter(|| flicker_noise(1 << 16, 1.0, &mut stream(1, 0, Lane::Auxiliary)).unwrap())
    });
}

fn trial(c: &mut Criterion) {
    let cfg = phase_session(200, 0.15, 50);
    c.bench_function("phase_trial_50_steps", |b| {
        b.iter(|| run_trial(black_box(&cfg), 0).unwrap())
    });
}

criterion_group!(benches, squeezing, posterior_update, flicker, trial);
criterion_main!(benches);
