//! Benchmarks for the hot kernels: form-space construction, endstate and
//! incremental mapping estimation, and correlation nearest-neighbor
//! evaluation.
//!
//! Run with `cargo bench -p lexmorph-bench`; append e.g. `-- endstate` to
//! pick one group.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lexmorph_core::corpus::{assemble_dataset, Dataset, EmbeddingTable, JoinKey};
use lexmorph_core::eval::accuracy_report;
use lexmorph_core::form::{build_form_matrix, extract_ngrams};
use lexmorph_core::mapping::{solve_endstate_sparse, train_frequency_informed, Direction};
use lexmorph_core::synth;

fn corpus(n_words: usize, dim: usize) -> (Dataset, EmbeddingTable) {
    let (entries, table) = synth::random_corpus(n_words, 9, 12, dim, 42);
    let dataset = assemble_dataset(&entries, &table, JoinKey::Form).unwrap();
    (dataset, table)
}

fn bench_ngrams(c: &mut Criterion) {
    let mut group = c.benchmark_group("form");
    group.bench_function("extract_ngrams/12-letter word", |b| {
        b.iter(|| extract_ngrams(std::hint::black_box("sananmuodostus"), 4, '#').unwrap())
    });
    for n_words in [1_000usize, 5_000] {
        let (dataset, _) = corpus(n_words, 8);
        group.bench_with_input(
            BenchmarkId::new("build_form_matrix", n_words),
            &dataset,
            |b, ds| b.iter(|| build_form_matrix(ds, 4, '#').unwrap()),
        );
    }
    group.finish();
}

fn bench_endstate(c: &mut Criterion) {
    let mut group = c.benchmark_group("endstate");
    group.sample_size(10);
    for n_words in [500usize, 2_000] {
        let (dataset, _) = corpus(n_words, 50);
        let (_, matrix) = build_form_matrix(&dataset, 4, '#').unwrap();
        let targets = dataset.embeddings.clone();
        group.bench_with_input(
            BenchmarkId::new("solve", format!("{n_words}w")),
            &(&matrix, &targets),
            |b, (m, t)| {
                b.iter(|| solve_endstate_sparse(m, t, 0.0, Direction::Comprehension).unwrap())
            },
        );
    }
    group.finish();
}

fn bench_fil(c: &mut Criterion) {
    let mut group = c.benchmark_group("fil");
    group.sample_size(10);
    let (entries, table) = synth::zipf_corpus(&synth::ZipfSpec { n_types: 500, dim: 50, seed: 3 });
    let dataset = assemble_dataset(&entries, &table, JoinKey::Form).unwrap();
    let (_, matrix) = build_form_matrix(&dataset, 4, '#').unwrap();
    let freqs: Vec<u64> = dataset.entries.iter().map(|e| e.frequency).collect();
    let targets = dataset.embeddings.clone();
    group.bench_function("epoch/500-type zipf", |b| {
        b.iter(|| {
            train_frequency_informed(
                &matrix,
                &targets,
                &freqs,
                0.001,
                1,
                7,
                Direction::Comprehension,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("eval");
    group.sample_size(10);
    for n_words in [1_000usize, 4_000] {
        let (dataset, table) = corpus(n_words, 100);
        let preds = dataset.embeddings.clone();
        group.bench_with_input(
            BenchmarkId::new("accuracy_report@10", n_words),
            &(&preds, &dataset, &table),
            |b, (p, d, t)| b.iter(|| accuracy_report(p, d, t, &[1, 10], None).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_ngrams, bench_endstate, bench_fil, bench_eval);
criterion_main!(benches);
