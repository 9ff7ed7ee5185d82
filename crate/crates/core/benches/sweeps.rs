use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phonon_router::device::DeviceConfig;
use phonon_router::dynamics::autler_townes_spectrum;
use phonon_router::fit::{log_spaced, monte_carlo};
use phonon_router::scattering::{flux_power_map, Rates};
use phonon_router::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_flux_map(c: &mut Criterion) {
    let cfg = DeviceConfig::reference_device();
    let flux: Vec<f64> = (0..151).map(|i| 0.25 + 0.15 * i as f64 / 150.0).collect();
    let powers = log_spaced(1e-18, 1e-12, 61);
    let mut g = c.benchmark_group("flux_power_map");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| flux_power_map(black_box(&cfg), &flux, &powers, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_autler_townes(c: &mut Criterion) {
    let rates = Rates::new(21e6, 8e6);
    let detunings: Vec<f64> = (0..601).map(|i| -300e6 + 1e6 * i as f64).collect();
    let mut g = c.benchmark_group("autler_townes_spectrum");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| autler_townes_spectrum(&rates, 1e4, 185e6, 0.0, black_box(&detunings), exec).unwrap())
        });
    }
    g.finish();
}

fn bench_fit_monte_carlo(c: &mut Criterion) {
    let rates = Rates::new(21e6, 8e6);
    let powers = log_spaced(1e-16, 1e-12, 30);
    let seeds: Vec<u64> = (0..100).collect();
    let mut g = c.benchmark_group("fit_monte_carlo");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| monte_carlo(2e14, &rates, black_box(&powers), 0.01, &seeds, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_flux_map, bench_autler_townes, bench_fit_monte_carlo);
criterion_main!(benches);
