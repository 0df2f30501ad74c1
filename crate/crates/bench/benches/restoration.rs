use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pgq_bench::scene;
use pgq_core::admtv::awgn_solve_beta;
use pgq_core::fft::Fft2;
use pgq_core::solver::{beta_from_noise, tau_update};
use pgq_core::{
    convolve, corrupt, joint_solve, AdmTvParams, Boundary, Kernel, NoiseParams, SolverConfig,
};

fn params() -> NoiseParams {
    NoiseParams::new(1024.0, 1e-4, 1.0 / 256.0, 2.2).unwrap()
}

fn forward_model(c: &mut Criterion) {
    let k = Kernel::pillbox(9.0).unwrap();
    let mut g = c.benchmark_group("forward");
    for size in [128, 256] {
        let x = scene(size);
        g.bench_with_input(BenchmarkId::new("convolve_extended", size), &x, |b, x| {
            b.iter(|| convolve(black_box(x), &k, Boundary::Extended).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("corrupt", size), &x, |b, x| {
            b.iter(|| corrupt(black_box(x), &k, &params(), 1).unwrap())
        });
        let plan = Fft2::new(size, size);
        g.bench_with_input(BenchmarkId::new("fft_real_pair", size), &x, |b, x| {
            b.iter(|| plan.forward_real_pair(black_box(x.data()), x.data()))
        });
    }
    g.finish();
}

fn tau_sweep(c: &mut Criterion) {
    let p = params();
    let y: Vec<f64> = (0..65536).map(|i| (i % 997) as f64 / 997.0).collect();
    c.bench_function("tau_update_65536", |b| {
        b.iter(|| {
            y.iter()
                .map(|&v| tau_update(black_box(0.9 * v + 0.01), 0.001, v, &p, 4.0e4))
                .sum::<f64>()
        })
    });
}

fn solvers(c: &mut Criterion) {
    let k = Kernel::pillbox(5.0).unwrap();
    let y = corrupt(&scene(128), &k, &params(), 1).unwrap();
    let cfg = SolverConfig {
        max_iters: 20,
        ..SolverConfig::deconvolution()
    };
    let tv = AdmTvParams {
        max_iters: 20,
        ..AdmTvParams::default()
    };
    let beta = beta_from_noise(&y, &params(), 1.0).unwrap();
    let mut g = c.benchmark_group("solve_128_20iters");
    g.sample_size(10);
    g.bench_function("awgn_tv", |b| {
        b.iter(|| awgn_solve_beta(black_box(&y), &k, beta, &tv).unwrap())
    });
    g.bench_function("prop_tv", |b| {
        b.iter(|| joint_solve(black_box(&y), &k, &params(), &tv, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, forward_model, tau_sweep, solvers);
criterion_main!(benches);
