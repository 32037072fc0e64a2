use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sps_core::benders::{run, BendersConfig};
use sps_core::fault::partition;
use sps_core::fixtures::{self, RandomMode};
use sps_core::master::{Master, MasterMethod};
use sps_core::oracle::{enumerate_solve, max_distance_bisection, DEFAULT_LIMIT};
use sps_core::par::Execution;
use sps_core::problem::build;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

/// The largest randomized instance among the first seeds, by binary count.
fn largest_random() -> sps_core::model::ShipScenario {
    (0..20u64)
        .map(|seed| fixtures::random_small(seed, RandomMode::ALL[seed as usize % 5], 0.6))
        .max_by_key(|s| build(s, &partition(s).unwrap()).unwrap().free_binaries())
        .unwrap()
}

fn oracle(c: &mut Criterion) {
    let s = largest_random();
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    let mut g = c.benchmark_group("oracle_enumeration");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_solve(&inst, DEFAULT_LIMIT, exec).ok())
        });
    }
    g.finish();
}

fn bisection(c: &mut Criterion) {
    let s = largest_random();
    let part = partition(&s).unwrap();
    let mut g = c.benchmark_group("max_distance_bisection");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| max_distance_bisection(&s, &part, 1e-2, DEFAULT_LIMIT, exec).ok())
        });
    }
    g.finish();
}

fn master_search(c: &mut Criterion) {
    let s = largest_random();
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    let m = Master::new(&inst).unwrap();
    let mut g = c.benchmark_group("master_exhaustive");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| m.solve_with(MasterMethod::Exhaustive, exec).ok())
        });
    }
    g.finish();
}

fn benders_case1(c: &mut Criterion) {
    let s = fixtures::case1(140.0);
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    let mut g = c.benchmark_group("benders_case1");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = BendersConfig { exec, ..BendersConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| b.iter(|| run(&inst, cfg).ok()));
    }
    g.finish();
}

criterion_group!(benches, oracle, bisection, master_search, benders_case1);
criterion_main!(benches);
