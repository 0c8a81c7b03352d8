//! Benchmarks for the hot paths: index construction, message ranking,
//! pool fusion, and a full per-query thread ranking.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use threadfuse_bench::fixture;
use threadfuse_core::fusion::{rank_threads, run_method};
use threadfuse_core::index::build_index;
use threadfuse_core::scoring::{normalize_pool, rank_messages};
use threadfuse_core::{AggregationMethod, KLimit, SmoothingParams};

fn bench_build_index(c: &mut Criterion) {
    let fx = fixture();
    c.bench_function("build_index_4k_messages", |b| {
        b.iter(|| build_index(black_box(&fx.messages)).unwrap())
    });
}

fn bench_rank_messages(c: &mut Criterion) {
    let fx = fixture();
    let query = &fx.queries[0].text;
    c.bench_function("rank_messages_pool_1000", |b| {
        b.iter(|| {
            rank_messages(
                black_box(&fx.index),
                SmoothingParams::new(1000.0),
                black_box(query),
                1000,
            )
            .unwrap()
        })
    });
}

fn bench_fusion(c: &mut Criterion) {
    let fx = fixture();
    let pool = rank_messages(
        &fx.index,
        SmoothingParams::new(1000.0),
        &fx.queries[0].text,
        1000,
    )
    .unwrap();
    let normalized = normalize_pool(&pool);
    let mut group = c.benchmark_group("fuse_pool");
    for method in [
        AggregationMethod::CombSum,
        AggregationMethod::CombGnz,
        AggregationMethod::ExpCombMnz,
    ] {
        group.bench_function(method.name(), |b| {
            b.iter(|| run_method(black_box(&normalized), method, KLimit::Top(3)))
        });
    }
    group.finish();
}

fn bench_full_query(c: &mut Criterion) {
    let fx = fixture();
    c.bench_function("rank_threads_combsum_k3", |b| {
        b.iter(|| {
            rank_threads(
                black_box(&fx.index),
                SmoothingParams::new(1000.0),
                black_box(&fx.queries[0].text),
                1000,
                AggregationMethod::CombSum,
                KLimit::Top(3),
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_build_index,
    bench_rank_messages,
    bench_fusion,
    bench_full_query
);
criterion_main!(benches);
