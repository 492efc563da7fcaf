//! Sequential vs parallel execution of the heavy kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gloveforce_core::geometry::{fundamental_from_poses, score_proposals};
use gloveforce_core::signal::{
    gaussian_smooth, hampel_filter, rolling_percentile_baseline, rolling_rms, run_conditioning, HampelParams,
};
use gloveforce_core::synth::{generate_session, RandomScene, RandomSession, Scene, SceneScript, SessionScript};
use gloveforce_core::{Config, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PATHS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn signal(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| {
            let spike = if rng.random_bool(0.01) { 50.0 } else { 0.0 };
            (i as f64 * 0.01).sin() * 10.0 + rng.random_range(-1.0..1.0) + spike
        })
        .collect()
}

fn windowed(c: &mut Criterion) {
    // ten minutes at 100 Hz
    let x = signal(60_000);
    let mut g = c.benchmark_group("windowed");
    g.throughput(Throughput::Elements(x.len() as u64));
    g.sample_size(10);
    for (name, exec) in PATHS {
        g.bench_with_input(BenchmarkId::new("hampel", name), &x, |b, x| {
            b.iter(|| hampel_filter(x, HampelParams::default(), exec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("baseline_30s", name), &x, |b, x| {
            b.iter(|| rolling_percentile_baseline(x, 3001, 0.05, exec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("rms_1s", name), &x, |b, x| b.iter(|| rolling_rms(x, 101, exec)));
        g.bench_with_input(BenchmarkId::new("gaussian", name), &x, |b, x| {
            b.iter(|| gaussian_smooth(x, 2.0, exec).unwrap())
        });
    }
    g.finish();
}

fn conditioning(c: &mut Criterion) {
    let script = SessionScript::randomized(3, &RandomSession::default());
    let session = generate_session(&script).unwrap().session;
    let params = Config::default().conditioning();
    let mut g = c.benchmark_group("conditioning");
    g.sample_size(10);
    for (name, exec) in PATHS {
        g.bench_function(name, |b| b.iter(|| run_conditioning(&session, &params, exec).unwrap()));
    }
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let scene = Scene::new(SceneScript::randomized(
        5,
        &RandomScene { n_frames: 2, width: 640, height: 480, ..Default::default() },
    ))
    .unwrap();
    let frame = scene.render(0, Execution::Parallel).unwrap();
    let flow = frame.flow.unwrap();
    let f = fundamental_from_poses(&scene.camera(0), &scene.camera(1), 1e-3).unwrap();
    let mut g = c.benchmark_group("scoring");
    for (name, exec) in PATHS {
        g.bench_function(name, |b| b.iter(|| score_proposals(&f, &flow, &frame.masks, 2, 50, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, windowed, conditioning, scoring);
criterion_main!(benches);
