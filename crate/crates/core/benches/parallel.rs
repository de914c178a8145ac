//! Parallel vs sequential timing for the data-parallel hot paths.
//!
//! The same seeded workloads run inside a one-thread rayon pool (the
//! sequential baseline) and the default pool. Outputs are identical in both
//! cases because every simulation owns an index-derived rng stream; only the
//! wall time differs. Building the crate with `--no-default-features`
//! replaces rayon entirely with plain iterators.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::collections::HashMap;

use odimdp_core::policy::{estimate_transitions, Counts, TransitionModel};
use odimdp_core::sim::{generate_corpus, posterior_first, InningsStart, SimulationConfig};
use odimdp_core::state::{FirstInningsState, SecondInningsState};

fn realistic_model<S: odimdp_core::state::GameState>() -> TransitionModel<S> {
    let global = Counts {
        visits: 10_000,
        wickets: 250,
        runs: [4200, 3400, 900, 100, 800, 350],
    };
    TransitionModel::from_counts(HashMap::new(), HashMap::new(), global, 1).unwrap()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool builds")
}

fn bench_posterior(c: &mut Criterion) {
    let model = realistic_model::<FirstInningsState>();
    let start = InningsStart::fresh_first();
    let config = SimulationConfig::behavioral(2000, 42);
    let mut group = c.benchmark_group("posterior_2000_sims");
    for threads in [1, num_threads()] {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                let pool = pool(threads);
                b.iter(|| pool.install(|| posterior_first(&model, None, &start, &config).unwrap()));
            },
        );
    }
    group.finish();
}

fn bench_transition_estimation(c: &mut Criterion) {
    let model_1 = realistic_model::<FirstInningsState>();
    let model_2 = realistic_model::<SecondInningsState>();
    let corpus = generate_corpus(&model_1, &model_2, 200, 7);
    let mut group = c.benchmark_group("estimate_transitions_200_matches");
    for threads in [1, num_threads()] {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                let pool = pool(threads);
                b.iter(|| {
                    pool.install(|| estimate_transitions::<FirstInningsState>(&corpus).unwrap())
                });
            },
        );
    }
    group.finish();
}

fn num_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .max(2)
}

criterion_group!(benches, bench_posterior, bench_transition_estimation);
criterion_main!(benches);
