use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use dwrpm_bench::{model_batch, uniform_tensor};
use dwrpm_core::layers::{Activation, Conv1dLayer, LstmLayer, Mode};
use dwrpm_core::models::{ArchSpec, Architecture};
use dwrpm_core::tensor::{matmul, matmul_nt, matmul_tn};
use dwrpm_core::Rng;

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    // The first deep-branch layer: a batch of 8 windows against 210×300 weights.
    let (x, w, g) = (uniform_tensor(&[8, 210], 1), uniform_tensor(&[210, 300], 2), uniform_tensor(&[8, 300], 3));
    group.throughput(Throughput::Elements((8 * 210 * 300) as u64));
    group.bench_function("forward 8x210x300", |b| b.iter(|| matmul(black_box(&x), black_box(&w)).unwrap()));
    group.bench_function("weight grad tn", |b| b.iter(|| matmul_tn(black_box(&x), black_box(&g)).unwrap()));
    group.bench_function("input grad nt", |b| b.iter(|| matmul_nt(black_box(&g), black_box(&w)).unwrap()));
    group.finish();
}

fn bench_conv1d(c: &mut Criterion) {
    let mut group = c.benchmark_group("conv1d");
    let mut rng = Rng::new(4);
    for c_in in [1, 100] {
        let layer = Conv1dLayer::new(100, c_in, 5, Activation::Relu, &mut rng).unwrap();
        let x = uniform_tensor(&[8, 210, c_in], 5);
        let grad = uniform_tensor(&[8, 206, 100], 6);
        group.bench_with_input(BenchmarkId::new("forward", c_in), &x, |b, x| b.iter(|| layer.forward(black_box(x)).unwrap()));
        group.bench_with_input(BenchmarkId::new("backward", c_in), &x, |b, x| {
            b.iter(|| layer.backward(black_box(x), black_box(&grad)).unwrap())
        });
    }
    group.finish();
}

fn bench_lstm(c: &mut Criterion) {
    let mut rng = Rng::new(7);
    let layer = LstmLayer::new(1, 50, true, &mut rng).unwrap();
    let x = uniform_tensor(&[8, 210, 1], 8);
    c.bench_function("lstm sequence forward 8x210", |b| b.iter(|| layer.forward(black_box(&x)).unwrap()));
}

fn bench_models(c: &mut Criterion) {
    let mut group = c.benchmark_group("train step");
    group.sample_size(20);
    let (x, coords, grad) = model_batch(8, 210, 9);
    for arch in Architecture::ALL {
        let mut rng = Rng::new(10);
        let mut model = ArchSpec::default_for(arch).build(210, &mut rng).unwrap();
        group.bench_function(BenchmarkId::new("forward+backward", arch.name()), |b| {
            b.iter(|| {
                model.forward(black_box(&x), black_box(&coords), Mode::Train, &mut rng).unwrap();
                model.backward(black_box(&grad)).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("predict", arch.name()), |b| {
            b.iter(|| model.predict(black_box(&x), black_box(&coords)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_conv1d, bench_lstm, bench_models);
criterion_main!(benches);
