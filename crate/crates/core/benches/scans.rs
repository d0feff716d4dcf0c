//! Parallel (rayon) against sequential execution of the two data-parallel
//! scans: the Schur quotient grid and the von Neumann sample norms.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use planar_dilation::exec::{par_map, seq_map};
use planar_dilation::factorization::{eigen_kernel, schur_certificate_at};
use planar_dilation::homomorphism::{operator_sampler, GeneralOperator, ModelOperatorA, SupportedOperator, VnConfig};
use planar_dilation::linalg::op_norm;
use planar_dilation::pick::index_grid;
use planar_dilation::{Complex64, PlanarDomain};

fn operator() -> ModelOperatorA {
    let dom = PlanarDomain::annulus(0.5).unwrap();
    ModelOperatorA::boundary(&dom, Complex64::new(0.7, 0.0), Complex64::new(0.55, 0.35), Complex64::new(1.0, 0.0), 64, 200).unwrap()
}

fn schur_grid(c: &mut Criterion) {
    let dom = PlanarDomain::annulus(0.5).unwrap();
    let ek = eigen_kernel(&GeneralOperator::new(operator().matrix()).unwrap()).unwrap();
    let grid = index_grid(&dom, 128);
    let scan = |j: usize| schur_certificate_at(&ek, &dom, &grid[j], 200).map(|c| c.min_eigenvalue).unwrap_or(f64::NAN);
    let mut g = c.benchmark_group("schur_grid_128");
    g.bench_function(BenchmarkId::new("parallel", rayon_threads()), |b| b.iter(|| par_map(grid.len(), scan)));
    g.bench_function("sequential", |b| b.iter(|| seq_map(grid.len(), scan)));
    g.finish();
}

fn vn_samples(c: &mut Criterion) {
    let dom = PlanarDomain::annulus(0.5).unwrap();
    let op = SupportedOperator::A(operator());
    let config = VnConfig { grid_size: 64, ..VnConfig::new(2000, 5, 1) };
    let sampler = operator_sampler(&op, &dom, &config).unwrap();
    let norm = |i: usize| op.apply(&sampler.sample(1, i), None).map(|m| op_norm(&m)).unwrap_or(f64::NAN);
    let mut g = c.benchmark_group("vn_samples_2000");
    g.bench_function(BenchmarkId::new("parallel", rayon_threads()), |b| b.iter(|| par_map(config.sample_count, norm)));
    g.bench_function("sequential", |b| b.iter(|| seq_map(config.sample_count, norm)));
    g.finish();
}

/// Label for the parallel runs; equal to the sequential path without the
/// `parallel` feature.
fn rayon_threads() -> String {
    if cfg!(feature = "parallel") {
        format!("{}-threads", std::thread::available_parallelism().map_or(1, |n| n.get()))
    } else {
        "fallback".into()
    }
}

criterion_group!(benches, schur_grid, vn_samples);
criterion_main!(benches);
