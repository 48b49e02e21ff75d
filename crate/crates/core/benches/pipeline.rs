//! Sequential-vs-parallel comparison of the hot paths: one full scoring pass
//! over all candidates, a complete compression run, and batch fingerprinting.
//!
//! The `parallel` scenarios install pools of different sizes around the same
//! entry points; outputs are identical by construction, only wall time moves.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use fgc_core::fingerprint::{fingerprint_corpus, MatchMode};
use fgc_core::search::{fgcompress, SearchConfig, SearchState};
use fgc_core::synth::planted_corpus;
use fgc_core::with_thread_limit;

fn bench_corpus(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    planted_corpus(
        &mut rng,
        n,
        &["C(=O)N", "c1ccccc1", "C(F)(F)F"],
        (0, 2),
        (6, 14),
    )
    .molecules
}

fn pool_sizes() -> Vec<usize> {
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4);
    if cores > 1 {
        vec![1, cores]
    } else {
        vec![1]
    }
}

fn scoring_pass(c: &mut Criterion) {
    let corpus = bench_corpus(400);
    let config = SearchConfig::default();
    let state = SearchState::new(&corpus, &config).unwrap();
    let candidates = state.enumerate_candidates();

    let mut group = c.benchmark_group("score_all_candidates");
    group.bench_function("sequential", |b| {
        b.iter(|| {
            candidates
                .iter()
                .map(|cand| state.score_candidate(cand).total)
                .fold(f64::INFINITY, f64::min)
        })
    });
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::new("parallel", threads),
            &threads,
            |b, &threads| {
                with_thread_limit(Some(threads), || {
                    b.iter(|| {
                        let scores = fgc_core::search::score_all(&state, &candidates);
                        scores.iter().map(|m| m.total).fold(f64::INFINITY, f64::min)
                    })
                })
            },
        );
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let corpus = bench_corpus(150);
    let mut group = c.benchmark_group("fgcompress");
    group.sample_size(10);
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                let config = SearchConfig {
                    max_iters: 12,
                    threads: Some(threads),
                    ..SearchConfig::default()
                };
                b.iter(|| fgcompress(&corpus, &config).unwrap().trace.rows.len())
            },
        );
    }
    group.finish();
}

fn batch_fingerprints(c: &mut Criterion) {
    let corpus = bench_corpus(300);
    let config = SearchConfig {
        max_iters: 10,
        ..SearchConfig::default()
    };
    let codebook = fgcompress(&corpus, &config).unwrap().codebook;

    let mut group = c.benchmark_group("fingerprint_corpus");
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                with_thread_limit(Some(threads), || {
                    b.iter(|| {
                        fingerprint_corpus(&corpus, &codebook, MatchMode::Overlapping)
                            .fingerprints
                            .len()
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, scoring_pass, full_run, batch_fingerprints);
criterion_main!(benches);
