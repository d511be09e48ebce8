use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ngram_graph::theory::{
    build_sensing, random_sparse_counts, sparse_recover, Allocation, RecoveryMethod, RecoveryOptions, SensingOperator,
};
use ngram_graph::AttributeSchema;

fn solvers(c: &mut Criterion) {
    let schema = AttributeSchema::uniform("bench", &[40]).unwrap();
    let mut group = c.benchmark_group("sparse_recover");
    for r in [200, 400, 800] {
        let b = build_sensing(&schema, r, 1, Allocation::Equal, 1.0 / (r as f64).sqrt()).unwrap();
        let op = b.level_operator(2).unwrap();
        let x = random_sparse_counts(op.cols(), 5, 1, 4, 9);
        let f = op.apply(&x);
        for method in [RecoveryMethod::Omp, RecoveryMethod::Ista] {
            let opts = RecoveryOptions { method, budget: Some(5), ..Default::default() };
            group.bench_with_input(BenchmarkId::new(format!("{method:?}"), r), &r, |bch, _| {
                bch.iter(|| sparse_recover(&f, &op, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
