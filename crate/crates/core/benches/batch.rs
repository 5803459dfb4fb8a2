use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mirage_core::harness::{run_batch_sequential, PreparedRun, RunConfig};

fn prepared() -> PreparedRun {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let config = RunConfig::load(fixtures.join("random.toml")).expect("random.toml loads");
    PreparedRun::new(config).expect("fixture config is valid")
}

fn batch(c: &mut Criterion) {
    let prepared = prepared();
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for games in [8u64, 32] {
        let seeds: Vec<u64> = (0..games).collect();
        group.bench_with_input(BenchmarkId::new("sequential", games), &seeds, |b, seeds| {
            b.iter(|| run_batch_sequential(&prepared, seeds))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", games), &seeds, |b, seeds| {
            b.iter(|| mirage_core::harness::run_batch_parallel(&prepared, seeds))
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
