use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kgphase::discretization::RadialGrid;
use kgphase::scenarios::{landau_pencil, LandauScenario};
use kgphase::spectral::{solve_sectors, solve_sectors_sequential, QuadraticPencil};
use std::sync::Arc;

/// One Landau pencil per angular momentum `m = -k..=k`.
fn sweep(n: usize, k: i64) -> Vec<QuadraticPencil> {
    let s = LandauScenario::new(1.0, 2.0, 0.5, 10.0).unwrap();
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 8.0, n).unwrap());
    (-k..=k).map(|m| landau_pencil(&s, grid.clone(), m, 0.0).unwrap()).collect()
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("sector_sweep");
    group.sample_size(10);
    for n in [64, 128] {
        let pencils = sweep(n, 4);
        group.bench_with_input(BenchmarkId::new("parallel", n), &pencils, |b, p| b.iter(|| solve_sectors(p).unwrap()));
        group.bench_with_input(BenchmarkId::new("sequential", n), &pencils, |b, p| {
            b.iter(|| solve_sectors_sequential(p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
