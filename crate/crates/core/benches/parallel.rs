use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgejudge_core::eval::{loso_cv, Logistic, LosoOptions};
use edgejudge_core::par::Parallelism;
use edgejudge_core::pipeline::{self, SegmentOptions};
use edgejudge_core::preprocess::FeatureConfig;
use edgejudge_core::synth::{generate_dataset, SynthConfig};

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel),
];

fn small() -> SynthConfig {
    SynthConfig {
        n_skaters: 4,
        jumps_per_skater: 16,
        ..SynthConfig::default()
    }
}

fn bench_generate(c: &mut Criterion) {
    let cfg = small();
    let mut g = c.benchmark_group("generate");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_dataset(&cfg, mode).unwrap())
        });
    }
    g.finish();
}

fn bench_segment(c: &mut Criterion) {
    let raw = generate_dataset(&small(), Parallelism::Parallel).unwrap();
    let mut g = c.benchmark_group("segment");
    g.sample_size(10);
    for (name, mode) in MODES {
        let opts = SegmentOptions {
            parallelism: mode,
            ..SegmentOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pipeline::segment_dataset(&raw, &opts).unwrap())
        });
    }
    g.finish();
}

fn bench_loso(c: &mut Criterion) {
    let raw = generate_dataset(&small(), Parallelism::Parallel).unwrap();
    let (ds, _) = pipeline::prepare(raw, &SegmentOptions::default()).unwrap();
    let mut g = c.benchmark_group("loso_cv");
    g.sample_size(10);
    for (name, mode) in MODES {
        let opts = LosoOptions {
            parallelism: mode,
            ..LosoOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| loso_cv(&ds, FeatureConfig::CamPos12, &Logistic::default(), &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_generate, bench_segment, bench_loso);
criterion_main!(benches);
