//! Shared fixtures for the criterion benches.

use ngram_graph::rng::stream;
use ngram_graph::synth::molecule_like;
use ngram_graph::{AttributeSchema, MolecularGraph};

/// `n` molecule-shaped graphs of `m` vertices over the full schema.
pub fn molecule_corpus(n: usize, m: usize, seed: u64) -> (AttributeSchema, Vec<MolecularGraph>) {
    let schema = AttributeSchema::full();
    let mut rng = stream(seed, "bench/corpus");
    let graphs = (0..n).map(|_| molecule_like(&schema, m, &mut rng)).collect();
    (schema, graphs)
}
