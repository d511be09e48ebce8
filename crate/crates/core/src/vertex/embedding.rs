use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_schema, MolecularGraph};
use crate::matrix_io::{self, MatrixKind};
use crate::rng;
use crate::schema::{AttributeSchema, Fingerprint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDistribution {
    Rademacher,
    Gaussian,
}

/// Where a vertex embedding came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    RandomRademacher { seed: u64, scale: f64 },
    RandomGaussian { seed: u64, scale: f64 },
    Trained { dataset_id: String, config_hash: String, seed: u64 },
    BlockSensing { seed: u64, scale: f64, block_rows: Vec<usize> },
    External { description: String },
}

/// `W = [W^0, ..., W^{S-1}]`, shape `r x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexEmbeddingMatrix {
    weights: Array2<f64>,
    schema_id: String,
    fingerprint: Fingerprint,
    offsets: Vec<usize>,
    provenance: Provenance,
}

impl VertexEmbeddingMatrix {
    pub fn new(weights: Array2<f64>, schema: &AttributeSchema, provenance: Provenance) -> Result<Self> {
        if weights.ncols() != schema.width() {
            return Err(Error::Dimension(format!(
                "embedding has {} columns, schema width is {}",
                weights.ncols(),
                schema.width()
            )));
        }
        if weights.nrows() == 0 {
            return Err(Error::Dimension("embedding dimension must be at least 1".into()));
        }
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("embedding contains non-finite entries".into()));
        }
        Ok(VertexEmbeddingMatrix {
            weights,
            schema_id: schema.id().to_string(),
            fingerprint: schema.fingerprint(),
            offsets: schema.offsets().to_vec(),
            provenance,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Embedding dimension `r`.
    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    /// One-hot width `K`.
    pub fn width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Column offset of each attribute block.
    pub fn block_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Returns a copy with every entry multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        VertexEmbeddingMatrix { weights: &self.weights * alpha, ..self.clone() }
    }

    fn meta(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_id": self.schema_id,
            "schema_fingerprint": self.fingerprint,
            "block_offsets": self.offsets,
            "provenance": self.provenance,
        })
    }
}

pub fn random_embedding(
    schema: &AttributeSchema,
    r: usize,
    dist: EntryDistribution,
    seed: u64,
) -> Result<VertexEmbeddingMatrix> {
    random_embedding_scaled(schema, r, dist, seed, 1.0 / (r as f64).sqrt())
}

/// i.i.d. entries: `±scale` uniformly, or `N(0, scale^2)`.
pub fn random_embedding_scaled(
    schema: &AttributeSchema,
    r: usize,
    dist: EntryDistribution,
    seed: u64,
    scale: f64,
) -> Result<VertexEmbeddingMatrix> {
    if r == 0 {
        return Err(Error::Config("embedding dimension r must be >= 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let k = schema.width();
    let (weights, provenance) = match dist {
        EntryDistribution::Rademacher => (
            Array2::from_shape_simple_fn((r, k), || if rng.random::<bool>() { scale } else { -scale }),
            Provenance::RandomRademacher { seed, scale },
        ),
        EntryDistribution::Gaussian => (
            Array2::from_shape_simple_fn((r, k), || scale * rng.sample::<f64, _>(StandardNormal)),
            Provenance::RandomGaussian { seed, scale },
        ),
    };
    VertexEmbeddingMatrix::new(weights, schema, provenance)
}

/// `F = [W h_1, ..., W h_m]`, shape `r x m`.
pub fn embed_vertices(g: &MolecularGraph, w: &VertexEmbeddingMatrix) -> Result<Array2<f64>> {
    Ok(vertex_rows(g, w)?.reversed_axes())
}

/// Vertex embeddings as rows (`m x r`); column `i` of `embed_vertices`.
pub(crate) fn vertex_rows(g: &MolecularGraph, w: &VertexEmbeddingMatrix) -> Result<Array2<f64>> {
    check_schema(w.fingerprint, g.schema_fingerprint())?;
    let r = w.dim();
    let m = g.num_vertices();
    let mut out = Array2::zeros((m, r));
    for i in 0..m {
        let mut row = out.row_mut(i);
        for (j, &off) in w.offsets.iter().enumerate() {
            row += &w.weights.column(off + g.attr(i, j));
        }
    }
    Ok(out)
}

pub fn save_embedding(path: &Path, w: &VertexEmbeddingMatrix) -> Result<()> {
    matrix_io::write(path, MatrixKind::VertexEmbedding, &w.weights, &w.meta())
}

/// Reads an embedding file without a schema check.
pub fn read_embedding(path: &Path) -> Result<(VertexEmbeddingMatrix, String)> {
    let (weights, meta) = matrix_io::read(path, MatrixKind::VertexEmbedding)?;
    let fingerprint: Fingerprint = match meta.get("schema_fingerprint") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Format(format!("corrupt schema fingerprint: {e}")))?,
        None => return Err(Error::Format("schema fingerprint absent".into())),
    };
    let schema_id = meta
        .get("schema_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Format("schema id absent".into()))?
        .to_string();
    let offsets: Vec<usize> = serde_json::from_value(
        meta.get("block_offsets").cloned().ok_or_else(|| Error::Format("block offsets absent".into()))?,
    )?;
    if offsets.first() != Some(&0) || offsets.windows(2).any(|p| p[0] >= p[1]) || *offsets.last().unwrap() >= weights.ncols() {
        return Err(Error::Format("corrupt block offsets".into()));
    }
    let provenance: Provenance = serde_json::from_value(
        meta.get("provenance").cloned().ok_or_else(|| Error::Format("provenance absent".into()))?,
    )?;
    Ok((VertexEmbeddingMatrix { weights, schema_id: schema_id.clone(), fingerprint, offsets, provenance }, schema_id))
}

/// Reads an embedding file and checks it against `schema`.
pub fn load_embedding(path: &Path, schema: &AttributeSchema) -> Result<VertexEmbeddingMatrix> {
    let (w, _) = read_embedding(path)?;
    check_schema(schema.fingerprint(), w.fingerprint)?;
    if w.width() != schema.width() {
        return Err(Error::Dimension("embedding width differs from schema".into()));
    }
    Ok(w)
}

/// CSV for inspection: one row per embedding dimension, one column per
/// attribute value.
pub fn write_embedding_csv<W: Write>(mut out: W, w: &VertexEmbeddingMatrix, schema: &AttributeSchema) -> Result<()> {
    check_schema(schema.fingerprint(), w.fingerprint)?;
    write!(out, "dim")?;
    for label in schema.column_labels() {
        write!(out, ",{}", csv_field(&label))?;
    }
    writeln!(out)?;
    for (i, row) in w.weights.rows().into_iter().enumerate() {
        write!(out, "{i}")?;
        for x in row {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
