use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sphereframes::harmonics::build_sphere_grid;
use sphereframes::rotation_grid::build_rotation_grid;
use sphereframes::scale_grid::{covering_grid, WeightRule, DEFAULT_COVERAGE};
use sphereframes::transform::{discrete_energy, random_bandlimited};
use sphereframes::wavelet_spectra::{beta_table_with, Preset, ScaleDensity, ScaleQuadrature};
use sphereframes::Exec;

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn beta(c: &mut Criterion) {
    let profile = Preset::Poisson(2).profile(3);
    let quad = ScaleQuadrature::default();
    let mut group = c.benchmark_group("beta_table_n3_L32");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| beta_table_with(exec, 3, black_box(&profile), 32, &quad).unwrap())
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let n = 2;
    let band = 8;
    let profile = Preset::AbelPoisson.profile(n);
    let density = ScaleDensity::new(n, &profile, band).unwrap();
    let scales = covering_grid(&density, band, 1.5, WeightRule::Midpoint, DEFAULT_COVERAGE).unwrap();
    let rotations = build_rotation_grid(n, &[0.4, 0.4]).unwrap();
    let grid = build_sphere_grid(n, band).unwrap();
    let f = random_bandlimited(n, band, Some(0), 1).unwrap();
    let mut group = c.benchmark_group("discrete_energy_n2_L8");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| discrete_energy(exec, n, &profile, black_box(&f), &scales, &rotations, &grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, beta, energy);
criterion_main!(benches);
