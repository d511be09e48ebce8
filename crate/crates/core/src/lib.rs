//! N-gram graph embeddings for attributed (molecular) graphs.
//!
//! Vertices are encoded as concatenated one-hot attribute vectors and mapped
//! to `r` dimensions by a vertex embedding matrix `W`. A graph is embedded
//! by summing, for each walk length `n = 1..=T`, the element-wise products of
//! the vertex embeddings along every walk of `n` vertices.
//!
//! - [`schema`], [`graph`], [`ingest`]: attribute schemas, validated graphs,
//!   SDF and JSON readers.
//! - [`vertex`]: random and trained vertex embeddings.
//! - [`ngram`]: the graph embedding and its enumeration oracle.
//! - [`theory`]: count statistics, block-diagonal sensing, sparse recovery.
//! - [`predict`]: regularized linear models, metrics, cross-validation.

pub mod error;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod matrix_io;
pub mod ngram;
pub mod predict;
pub mod rng;
pub mod scalar;
pub mod schema;
pub mod synth;
pub mod theory;
pub mod vertex;

pub use error::{Error, Result};
pub use features::{FeatureManifest, FeatureMatrix};
pub use graph::{GraphDocument, MolecularGraph, RawGraph, ValidationReport};
pub use ngram::{embed_corpus, graph_embed, graph_embed_with, oracle_embed, EmbedOptions, NGramEmbedding, WalkVariant};
pub use schema::{AttributeSchema, Fingerprint};
pub use vertex::{Provenance, VertexEmbeddingMatrix};
