use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ngram_graph::ngram::{embed_corpus, graph_embed, EmbedOptions};
use ngram_graph::vertex::{random_embedding, EntryDistribution};
use ngram_graph_bench::molecule_corpus;

fn by_walk_length(c: &mut Criterion) {
    let (schema, graphs) = molecule_corpus(1, 25, 0);
    let w = random_embedding(&schema, 100, EntryDistribution::Gaussian, 1).unwrap();
    let mut group = c.benchmark_group("graph_embed/T");
    for t in [1, 2, 4, 6, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| b.iter(|| graph_embed(&graphs[0], &w, t).unwrap()));
    }
    group.finish();
}

fn by_graph_size(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph_embed/m");
    for m in [10, 25, 50, 100, 200] {
        let (schema, graphs) = molecule_corpus(1, m, 2);
        let w = random_embedding(&schema, 100, EntryDistribution::Gaussian, 1).unwrap();
        group.throughput(Throughput::Elements((m + graphs[0].num_edges()) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| b.iter(|| graph_embed(&graphs[0], &w, 6).unwrap()));
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let (schema, graphs) = molecule_corpus(1128, 25, 3);
    let w = random_embedding(&schema, 100, EntryDistribution::Gaussian, 1).unwrap();
    let opts = EmbedOptions::with_t(6);
    let mut group = c.benchmark_group("embed_corpus");
    group.sample_size(10);
    group.throughput(Throughput::Elements(graphs.len() as u64));
    group.bench_function("1128x25", |b| b.iter(|| embed_corpus(&graphs, &w, &opts, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, by_walk_length, by_graph_size, corpus);
criterion_main!(benches);
