use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use steincert_bench::jittered_cloud;
use steincert_core::hermite::hermite_lp_norm;
use steincert_core::quadrature::gauss_hermite;
use steincert_core::tensor::SymmetricTensor;
use steincert_core::transport::{wasserstein_1d, wasserstein_exact};

fn quadrature(c: &mut Criterion) {
    c.bench_function("gauss_hermite_64", |b| b.iter(|| gauss_hermite(black_box(64))));
    c.bench_function("hermite_lp_norm_k4_p3", |b| b.iter(|| hermite_lp_norm(4, black_box(3.0), 32).unwrap()));
}

fn tensors(c: &mut Criterion) {
    let v = [0.3, -1.1, 0.7, 0.2];
    let t = SymmetricTensor::outer_power(&v, 5).unwrap();
    c.bench_function("h_norm_order5_d4", |b| b.iter(|| black_box(&t).h_norm()));
    c.bench_function("outer_power_order6_d4", |b| b.iter(|| SymmetricTensor::outer_power(black_box(&v), 6).unwrap()));
}

fn transport(c: &mut Criterion) {
    let mut g = c.benchmark_group("wasserstein");
    for n in [50usize, 200] {
        let a = jittered_cloud(n, 2, 0.0);
        let b2 = jittered_cloud(n, 2, 0.5);
        g.bench_with_input(BenchmarkId::new("exact_2d", n), &n, |b, _| b.iter(|| wasserstein_exact(&a, &b2, 2.0).unwrap()));
    }
    let x = jittered_cloud(10_000, 1, 0.0);
    let y = jittered_cloud(10_000, 1, 0.3);
    g.bench_function("sorted_1d_10000", |b| b.iter(|| wasserstein_1d(x.points(), y.points(), 2.0).unwrap()));
    g.finish();
}

criterion_group!(benches, quadrature, tensors, transport);
criterion_main!(benches);
