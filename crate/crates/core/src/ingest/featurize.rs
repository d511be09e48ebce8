//! Atom attribute extraction for the bundled atom schemas.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{Adjacency, MolecularGraph, RawGraph};
use crate::schema::AttributeSchema;

use super::sdf::MolRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaChoice {
    /// Eight attributes, 42 one-hot features.
    #[default]
    Full,
    /// Five attributes, 32 one-hot features (no hydrogen or donor/acceptor data).
    Reduced,
}

impl SchemaChoice {
    pub fn schema(self) -> AttributeSchema {
        match self {
            SchemaChoice::Full => AttributeSchema::full(),
            SchemaChoice::Reduced => AttributeSchema::reduced(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeaturizerConfig {
    pub schema: SchemaChoice,
    /// Default valence per element, used for implicit hydrogens.
    pub valence: BTreeMap<String, u32>,
    pub acceptor_elements: Vec<String>,
    /// Elements counted as donors when they carry at least one hydrogen.
    pub donor_elements: Vec<String>,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        let valence = [("H", 1), ("C", 4), ("N", 3), ("O", 2), ("F", 1), ("P", 3), ("S", 2), ("Cl", 1), ("Br", 1), ("I", 1)]
            .into_iter()
            .map(|(e, v)| (e.to_string(), v))
            .collect();
        FeaturizerConfig {
            schema: SchemaChoice::Full,
            valence,
            acceptor_elements: vec!["N".into(), "O".into()],
            donor_elements: vec!["N".into(), "O".into()],
        }
    }
}

impl FeaturizerConfig {
    pub fn with_schema(schema: SchemaChoice) -> Self {
        FeaturizerConfig { schema, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FeaturizedMolecule {
    pub graph: MolecularGraph,
    pub warnings: Vec<String>,
}

/// Converts a parsed record into an attributed heavy-atom graph.
///
/// Explicit hydrogens are folded into their neighbor's hydrogen count and
/// dropped as vertices. The record name becomes the graph id.
pub fn featurize(rec: &MolRecord, cfg: &FeaturizerConfig) -> Result<FeaturizedMolecule> {
    let schema = cfg.schema.schema();
    let mut warnings = Vec::new();
    let n = rec.atoms.len();

    let heavy: Vec<usize> = (0..n).filter(|&i| rec.atoms[i].symbol != "H").collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in heavy.iter().enumerate() {
        new_index[i] = k;
    }

    let mut explicit_h = vec![0u32; n];
    let mut heavy_degree = vec![0usize; n];
    // Twice the bond-order sum, so aromatic bonds contribute 1.5 exactly.
    let mut twice_order = vec![0u32; n];
    let mut aromatic = vec![false; n];
    let mut edges = Vec::new();
    for b in &rec.bonds {
        let (u, v) = (b.u - 1, b.v - 1);
        let weight = if b.order == 4 { 3 } else { 2 * b.order as u32 };
        twice_order[u] += weight;
        twice_order[v] += weight;
        if b.order == 4 {
            aromatic[u] = true;
            aromatic[v] = true;
        }
        match (new_index[u] != usize::MAX, new_index[v] != usize::MAX) {
            (true, true) => {
                heavy_degree[u] += 1;
                heavy_degree[v] += 1;
                edges.push((new_index[u], new_index[v]));
            }
            (true, false) => explicit_h[u] += 1,
            (false, true) => explicit_h[v] += 1,
            (false, false) => {}
        }
    }

    let mut attributes = Vec::with_capacity(heavy.len());
    for &i in &heavy {
        let atom = &rec.atoms[i];
        let implicit_h = match cfg.valence.get(&atom.symbol) {
            Some(&valence) => {
                let used = twice_order[i] / 2 + atom.charge.unsigned_abs();
                Some(valence.saturating_sub(used))
            }
            None => {
                warnings.push(format!(
                    "atom {} ({}): element not in valence table, hydrogen count unknown",
                    i + 1,
                    atom.symbol
                ));
                None
            }
        };
        let total_h = implicit_h.map(|h| h + explicit_h[i]);

        let symbol = sym(&schema, 0, &atom.symbol);
        let degree = sym(&schema, 1, &heavy_degree[i].to_string());
        let charge = sym(&schema, charge_attr(cfg.schema), &atom.charge.to_string());
        let is_aromatic = aromatic[i] as usize;

        let row = match cfg.schema {
            SchemaChoice::Full => {
                let num_h = count_token(&schema, 2, total_h);
                let implicit = count_token(&schema, 3, implicit_h);
                let acceptor = cfg.acceptor_elements.contains(&atom.symbol) as usize;
                let donor = (cfg.donor_elements.contains(&atom.symbol) && total_h.unwrap_or(0) >= 1) as usize;
                vec![symbol, degree, num_h, implicit, charge, is_aromatic, acceptor, donor]
            }
            SchemaChoice::Reduced => {
                let implicit = count_token(&schema, 2, implicit_h);
                vec![symbol, degree, implicit, charge, is_aromatic]
            }
        };
        attributes.push(row);
    }

    let raw = RawGraph {
        id: Some(rec.name.clone()),
        num_vertices: heavy.len(),
        attributes,
        adjacency: Adjacency::Edges(edges),
        label: None,
    };
    let graph = MolecularGraph::from_raw(raw, &schema)?;
    Ok(FeaturizedMolecule { graph, warnings })
}

fn charge_attr(choice: SchemaChoice) -> usize {
    match choice {
        SchemaChoice::Full => 4,
        SchemaChoice::Reduced => 3,
    }
}

fn sym(schema: &AttributeSchema, j: usize, token: &str) -> usize {
    schema.value_or_unknown(j, token).expect("bundled count attributes carry Unknown")
}

fn count_token(schema: &AttributeSchema, j: usize, count: Option<u32>) -> usize {
    let unknown = schema.unknown_index(j).expect("bundled count attributes carry Unknown");
    match count {
        Some(c) => schema.value_index(j, &c.to_string()).unwrap_or(unknown),
        None => unknown,
    }
}
