use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ftchain_core::bounds::j_integral;
use ftchain_core::exponents::{ball_mass_curve, stable_index};
use ftchain_core::ft::{estimate_gamma2, ft_objective};
use ftchain_core::simulate::simulate;
use ftchain_core::trajectory::normalize_by_running_std;
use ftchain_core::{
    FtOptions, ProcessKind, ProcessSpec, RadiusGrid, Seed, SimplexWeights, StdConvention,
    Trajectory, TruncatedGram,
};

fn beta_prime_path(steps: usize) -> Trajectory {
    let kind = ProcessKind::BetaPrimeWalk {
        alpha: 0.5,
        beta: 3.5,
    };
    let t = simulate(&ProcessSpec::new(kind, 2, steps, Seed(1))).unwrap();
    normalize_by_running_std(&t, StdConvention::Population)
        .unwrap()
        .trajectory
}

fn ft(c: &mut Criterion) {
    let mut group = c.benchmark_group("ft");
    for n in [100, 400] {
        let t = beta_prime_path(n);
        let g = TruncatedGram::new(&t, 0.25).unwrap();
        let p = SimplexWeights::uniform(t.len());
        group.bench_with_input(BenchmarkId::new("objective", n), &n, |b, _| {
            b.iter(|| ft_objective(black_box(&g), black_box(&p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gram", n), &n, |b, _| {
            b.iter(|| TruncatedGram::new(black_box(&t), 0.25).unwrap())
        });
    }
    let t = beta_prime_path(100);
    let opts = FtOptions {
        iterations: 500,
        restarts: 1,
        ..FtOptions::default()
    };
    group.bench_function("estimate_101_points", |b| {
        b.iter(|| estimate_gamma2(black_box(&t), 0.25, &opts).unwrap())
    });
    group.finish();
}

fn exponents(c: &mut Criterion) {
    let kind = ProcessKind::GaussianWalk { sigma: vec![1.0] };
    let t = simulate(&ProcessSpec::new(kind, 3, 10_000, Seed(2))).unwrap();
    let radii = RadiusGrid::log_spaced(1e-3, 10.0, 200).unwrap();
    c.bench_function("ball_mass_10k", |b| {
        b.iter(|| ball_mass_curve(black_box(&t), &[1, 2, 4], &radii).unwrap())
    });
    let x: Vec<f64> = t.as_flat().to_vec();
    c.bench_function("stable_index_30k", |b| {
        b.iter(|| stable_index(black_box(&x), 10).unwrap())
    });
}

fn special(c: &mut Criterion) {
    let mut group = c.benchmark_group("j_integral");
    for d in [1usize, 2, 3, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| j_integral(black_box(1.0), 10.0, 0.5, d).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ft, exponents, special);
criterion_main!(benches);
