use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use marvel_bench::noisy_gaussians;
use marvel_core::rng::{stream, Stream};
use marvel_core::runner::{train_on, ModelSpec};
use marvel_core::scheduler::decide_batch;
use marvel_core::{ExperimentConfig, HistoryLedger, Method, Model, SchedulerConfig};

fn forward_backward(c: &mut Criterion) {
    let ds = noisy_gaussians(128, 16, 0);
    let model = Model::init(16, &[64], 1, &mut stream(0, Stream::Init, 0)).unwrap();
    let w = vec![1.0 / 128.0; 128];
    c.bench_function("forward mlp 16-64-1 batch 128", |b| {
        b.iter(|| model.forward(black_box(&ds.features)).unwrap())
    });
    c.bench_function("gradients mlp 16-64-1 batch 128", |b| {
        b.iter(|| model.gradients(black_box(&ds.features), &ds.labels, &w).unwrap())
    });
}

fn scheduler(c: &mut Criterion) {
    let n = 1024;
    let ds = noisy_gaussians(n, 2, 1);
    let model = Model::init(2, &[], 1, &mut stream(1, Stream::Init, 0)).unwrap();
    let idx: Vec<usize> = (0..128).collect();
    let logits = model.forward(&ds.features.select_rows(&idx)).unwrap();
    let labels: Vec<usize> = idx.iter().map(|&i| ds.labels[i]).collect();
    let mut ledger = HistoryLedger::new(n, 20).unwrap();
    let all: Vec<usize> = (0..n).collect();
    for e in 1..=10 {
        let m: Vec<f64> = (0..n).map(|i| ((i * 7 + e) % 11) as f64 - 3.0).collect();
        ledger.record(e, &all, &vec![1.0; n], &m).unwrap();
    }
    for method in [Method::Marvel, Method::MarvelPlus] {
        let cfg = SchedulerConfig {
            method,
            warm_up: 2,
            wait: 4,
            ..Default::default()
        };
        c.bench_function(&format!("decide_batch {method} b=128"), |b| {
            b.iter(|| decide_batch(&cfg, &ledger, 11, &idx, black_box(&logits), &labels).unwrap())
        });
    }
}

fn epochs(c: &mut Criterion) {
    let ds = noisy_gaussians(2000, 2, 2);
    let mut group = c.benchmark_group("train 2000x2, 5 epochs");
    group.sample_size(20);
    for method in [Method::Ce, Method::Marvel, Method::MarvelPlus] {
        let mut cfg = ExperimentConfig::default();
        cfg.epochs = 5;
        cfg.model = ModelSpec::Mlp { hidden: vec![16] };
        cfg.scheduler.method = method;
        cfg.scheduler.warm_up = 1;
        group.bench_function(method.to_string(), |b| {
            b.iter_batched(|| cfg.clone(), |cfg| train_on(&cfg, &ds, None).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(benches, forward_backward, scheduler, epochs);
criterion_main!(benches);
