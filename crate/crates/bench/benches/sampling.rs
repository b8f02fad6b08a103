//! Point sampling primitives: farthest point sampling, ball query, batch
//! draws and feature extraction.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use synthseg_bench::random_cloud;
use synthseg_core::model::{extract_features, FeatureParams};
use synthseg_core::sampler::{ball_query, farthest_point_sample, sample_batch, Modality};

fn bench_fps(c: &mut Criterion) {
    let cloud = random_cloud(4096, 1);
    c.bench_function("fps_4096_to_512", |b| {
        b.iter(|| farthest_point_sample(black_box(cloud.positions()), 512, 0).unwrap())
    });
}

fn bench_ball_query(c: &mut Criterion) {
    let cloud = random_cloud(32768, 2);
    let center = cloud.positions()[100];
    c.bench_function("ball_query_32k_r2", |b| {
        b.iter(|| ball_query(black_box(cloud.positions()), center, 2.0, 64))
    });
}

fn bench_sample_batch(c: &mut Criterion) {
    let cloud = random_cloud(262_144, 3);
    c.bench_function("sample_batch_8192_of_256k", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            sample_batch(black_box(&cloud), 8192, seed, Modality::RgbD).unwrap()
        })
    });
}

fn bench_features(c: &mut Criterion) {
    let cloud = random_cloud(8192, 4);
    let params = FeatureParams::default();
    c.bench_function("features_8192", |b| {
        b.iter(|| {
            extract_features(
                black_box(cloud.positions()),
                cloud.colors(),
                Modality::RgbD,
                &params,
            )
        })
    });
}

criterion_group!(benches, bench_fps, bench_ball_query, bench_sample_batch, bench_features);
criterion_main!(benches);
