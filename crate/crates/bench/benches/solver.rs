use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use negbound_bench::{default_measurements, small_measurements};
use negbound_core::bound::{lower_bound_negativity, lower_bound_negativity_robust};
use negbound_core::detector::{homodyne_povm, DetectorConfig};

fn povm(c: &mut Criterion) {
    let det = DetectorConfig::default();
    let mut group = c.benchmark_group("homodyne_povm");
    for cutoff in [3usize, 6, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &cutoff, |b, &n| {
            b.iter(|| homodyne_povm(black_box(&det), n).unwrap())
        });
    }
    group.finish();
}

fn bound(c: &mut Criterion) {
    let mut group = c.benchmark_group("lower_bound");
    group.sample_size(10);
    for n_max in [1usize, 2] {
        let ms = small_measurements(n_max);
        group.bench_with_input(BenchmarkId::new("exact", n_max), &ms, |b, ms| {
            b.iter(|| lower_bound_negativity(black_box(ms)).unwrap())
        });
    }
    let ms = default_measurements();
    group.bench_function("exact/3", |b| b.iter(|| lower_bound_negativity(black_box(&ms)).unwrap()));
    group.bench_function("robust/3", |b| b.iter(|| lower_bound_negativity_robust(black_box(&ms), 0.01).unwrap()));
    group.finish();
}

criterion_group!(benches, povm, bound);
criterion_main!(benches);
