use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hawknet_core::hho::{self, sphere, HhoParams, SearchSpace};
use hawknet_core::nn::{init_network, ForwardMode, NetworkConfig};
use hawknet_core::rng;
use hawknet_core::{full_report, ReportOptions};
use ndarray::Array2;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::seeded(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

fn network(c: &mut Criterion) {
    let model = init_network(&NetworkConfig::baseline(512)).unwrap();
    let mut group = c.benchmark_group("network");
    for batch in [32usize, 128] {
        let x = random_matrix(batch, 512, 1);
        let labels: Vec<usize> = (0..batch).map(|i| i % 3).collect();
        group.throughput(Throughput::Elements(batch as u64));
        group.bench_with_input(BenchmarkId::new("forward_infer", batch), &x, |b, x| {
            b.iter(|| model.forward(black_box(x.view()), ForwardMode::Infer).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("forward_backward", batch), &x, |b, x| {
            b.iter(|| {
                let out = model.forward(black_box(x.view()), ForwardMode::train(7)).unwrap();
                model.backward(out.cache.as_ref().unwrap(), &labels).unwrap()
            })
        });
    }
    group.finish();
}

fn harris_hawks(c: &mut Criterion) {
    let space = SearchSpace::uniform(10, -10.0, 10.0).unwrap();
    let mut group = c.benchmark_group("hho");
    for jobs in [1usize, 4] {
        let params = HhoParams { n_hawks: 30, max_iters: 100, jobs, ..HhoParams::default() };
        group.bench_with_input(BenchmarkId::new("sphere_30x100", jobs), &params, |b, p| {
            b.iter(|| hho::optimize(&sphere, &space, p, None).unwrap().best_fitness)
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let names: Vec<String> = ["FL", "MCL", "CLL"].iter().map(|s| s.to_string()).collect();
    let mut group = c.benchmark_group("metrics");
    for n in [1_000usize, 10_000] {
        let raw = random_matrix(n, 3, 2).mapv(f64::exp);
        let probs = &raw / &raw.sum_axis(ndarray::Axis(1)).insert_axis(ndarray::Axis(1));
        let truth: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let pred: Vec<usize> = (0..n).map(|i| (i * 7 + i / 3) % 3).collect();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_function(BenchmarkId::new("full_report", n), |b| {
            b.iter(|| full_report(probs.view(), &pred, &truth, &names, ReportOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, network, harris_hawks, metrics);
criterion_main!(benches);
