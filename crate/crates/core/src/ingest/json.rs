use std::io::{Read, Write};

use serde_json::Value;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::graph::{GraphDocument, MolecularGraph};
use crate::schema::AttributeSchema;

/// A document that could not be turned into a valid graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("document {index}: {message}")]
pub struct DocumentError {
    pub index: usize,
    pub message: String,
}

/// Reads graph documents from a JSON array, a single document, or a stream of
/// concatenated / newline-delimited documents.
///
/// A `schema_id` that does not match `schema` aborts the whole read; other
/// per-document failures are returned in place.
pub fn read_json_graphs<R: Read>(
    mut input: R,
    schema: &AttributeSchema,
) -> Result<Vec<Result<MolecularGraph, DocumentError>>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut values = Vec::new();
    for value in serde_json::Deserializer::from_str(&text).into_iter::<Value>() {
        match value? {
            Value::Array(items) => values.extend(items),
            other => values.push(other),
        }
    }

    let mut out = Vec::with_capacity(values.len());
    for (index, value) in values.into_iter().enumerate() {
        if let Some(id) = value.get("schema_id").and_then(Value::as_str) {
            if id != schema.id() {
                return Err(Error::SchemaMismatch {
                    expected: schema.id().to_string(),
                    found: id.to_string(),
                });
            }
        }
        let doc: GraphDocument = match serde_json::from_value(value) {
            Ok(doc) => doc,
            Err(e) => {
                out.push(Err(DocumentError { index, message: e.to_string() }));
                continue;
            }
        };
        out.push(
            MolecularGraph::from_raw(doc.into_raw(), schema)
                .map_err(|e| DocumentError { index, message: e.to_string() }),
        );
    }
    Ok(out)
}

/// Canonical single-line JSON for one graph.
pub fn to_canonical_json(g: &MolecularGraph, schema: &AttributeSchema) -> String {
    serde_json::to_string(&GraphDocument::from_graph(g, schema)).expect("graph documents serialize")
}

/// Writes newline-delimited canonical documents.
pub fn write_json_graphs<'a, W: Write>(
    mut out: W,
    graphs: impl IntoIterator<Item = &'a MolecularGraph>,
    schema: &AttributeSchema,
) -> Result<()> {
    for g in graphs {
        writeln!(out, "{}", to_canonical_json(g, schema))?;
    }
    Ok(())
}
