//! Vertex embedding matrices and the neighborhood-prediction trainer.

mod cbow;
mod embedding;

pub use cbow::{
    dataset_digest, evaluate_accuracy, extract_contexts, train_cbow, train_cbow_network, Aggregator, AttributeAccuracy, CbowConfig,
    CbowNetwork, ContextSample, DenseLayer, EpochStats, TrainingReport,
};
pub use embedding::{
    embed_vertices, load_embedding, random_embedding, random_embedding_scaled, read_embedding,
    save_embedding, write_embedding_csv, EntryDistribution, Provenance, VertexEmbeddingMatrix,
};
pub(crate) use embedding::vertex_rows;
