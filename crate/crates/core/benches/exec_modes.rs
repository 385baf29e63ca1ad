//! Sequential against parallel execution on the three data-parallel paths:
//! random-forest ranking, exhaustive enumeration and a full solve.

use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use octree_core::dataset::{load_csv, mdlp_binarize, reduce_unique, UniqueDataset};
use octree_core::engine::{train, SolveConfig};
use octree_core::heuristics::rf_ranking;
use octree_core::oracle::enumerate_optimal;
use octree_core::{Exec, MetricSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn iris() -> UniqueDataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/iris.csv");
    let raw = load_csv(&path, "species").expect("iris fixture loads");
    let (_, bin) = mdlp_binarize(&raw).expect("iris binarizes");
    reduce_unique(&bin)
}

/// Twelve distinct instances over six binary features with both labels.
fn small_binary(seed: u64) -> UniqueDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<u8>> = Vec::new();
    while rows.len() < 12 {
        let r: Vec<u8> = (0..6).map(|_| rng.gen_range(0..2)).collect();
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
    let weights: Vec<u64> = (0..12).map(|_| rng.gen_range(1..4)).collect();
    UniqueDataset::from_weighted(rows, labels, weights, 2).expect("valid dataset")
}

fn bench_rf(c: &mut Criterion) {
    let data = iris();
    let mut group = c.benchmark_group("rf_ranking");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| rf_ranking(&data, 100, 7, exec))
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let data = small_binary(3);
    let mut group = c.benchmark_group("oracle_depth2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_optimal(&data, 2, &MetricSpec::Accuracy, 0.0, None, exec).expect("within limits"))
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let data = iris();
    let mut group = c.benchmark_group("solve_iris_depth2");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SolveConfig {
            exec,
            ..SolveConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| train(&data, 2, &MetricSpec::Accuracy, cfg).expect("solves"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rf, bench_oracle, bench_solve);
criterion_main!(benches);
