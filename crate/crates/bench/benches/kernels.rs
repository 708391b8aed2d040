//! Hot-path benchmarks: the Gray-code counting kernel, the cycle census
//! walk, and the samplers feeding them.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use regsat_core::counting::{count_all, CountOptions};
use regsat_core::cycles::cycle_census;
use regsat_core::model::rng::replicate_stream;
use regsat_core::model::{sample_formula, sample_planted};
use regsat_core::ModelParams;

fn bench_count_all(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_all");
    group.sample_size(20);
    for n in [15usize, 18, 21] {
        let params = ModelParams::new(n, 2, 3).unwrap();
        let formula = sample_formula(&params, &mut replicate_stream(1, 0));
        group.bench_function(format!("gray_n{n}"), |b| {
            b.iter(|| count_all(black_box(&formula), &CountOptions::default()).unwrap())
        });
    }
    let params = ModelParams::new(15, 2, 3).unwrap();
    let formula = sample_formula(&params, &mut replicate_stream(1, 0));
    let opts = CountOptions {
        histogram: true,
        ..CountOptions::default()
    };
    group.bench_function("gray_n15_histogram", |b| {
        b.iter(|| count_all(black_box(&formula), &opts).unwrap())
    });
    group.finish();
}

fn bench_cycle_census(c: &mut Criterion) {
    let mut group = c.benchmark_group("cycle_census");
    let params = ModelParams::new(600, 2, 3).unwrap();
    let formula = sample_formula(&params, &mut replicate_stream(2, 0));
    for max_len in [1usize, 3, 4] {
        group.bench_function(format!("walk_n600_l{max_len}"), |b| {
            b.iter(|| cycle_census(black_box(&formula), max_len).unwrap())
        });
    }
    group.finish();
}

fn bench_samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("samplers");
    let big = ModelParams::new(9999, 2, 3).unwrap();
    group.bench_function("uniform_n9999", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            sample_formula(black_box(&big), &mut replicate_stream(3, rep))
        })
    });
    group.sample_size(20);
    let medium = ModelParams::new(600, 2, 3).unwrap();
    group.bench_function("planted_n600", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            sample_planted(black_box(&medium), &mut replicate_stream(4, rep)).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_count_all, bench_cycle_census, bench_samplers);
criterion_main!(benches);
