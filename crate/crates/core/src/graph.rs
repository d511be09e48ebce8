//! Attributed graph model, validation, one-hot encoding and relabeling.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Fingerprint};

/// Unvalidated graph data as it arrives from a file or a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGraph {
    pub id: Option<String>,
    pub num_vertices: usize,
    /// One row of attribute value indices per vertex.
    pub attributes: Vec<Vec<usize>>,
    pub adjacency: Adjacency,
    pub label: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Adjacency {
    /// Undirected edges, each listed once in either orientation.
    Edges(Vec<(usize, usize)>),
    /// Dense `m x m` matrix rows.
    Dense(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    AttributeRowWidth { vertex: usize, found: usize, expected: usize },
    AttributeOutOfRange { vertex: usize, attribute: usize, value: usize, cardinality: usize },
    AttributeRowCount { found: usize, expected: usize },
    SelfLoop { vertex: usize },
    EdgeOutOfRange { u: usize, v: usize },
    DuplicateEdge { u: usize, v: usize },
    Asymmetric { u: usize, v: usize },
    NonBinary { u: usize, v: usize, value: u8 },
    AdjacencyShape { row: usize, found: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::AttributeRowWidth { vertex, found, expected } => {
                write!(f, "attribute row width@{vertex}: {found} values, expected {expected}")
            }
            Violation::AttributeOutOfRange { vertex, attribute, value, cardinality } => write!(
                f,
                "index out of range@{vertex},{attribute}: value {value} >= cardinality {cardinality}"
            ),
            Violation::AttributeRowCount { found, expected } => {
                write!(f, "attribute row count: {found} rows for {expected} vertices")
            }
            Violation::SelfLoop { vertex } => write!(f, "self-loop@{vertex}"),
            Violation::EdgeOutOfRange { u, v } => write!(f, "edge out of range@{u},{v}"),
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge@{u},{v}"),
            Violation::Asymmetric { u, v } => write!(f, "asymmetric adjacency@{u},{v}"),
            Violation::NonBinary { u, v, value } => {
                write!(f, "non-binary adjacency@{u},{v}: {value}")
            }
            Violation::AdjacencyShape { row, found, expected } => {
                write!(f, "adjacency row {row} has {found} entries, expected {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every graph invariant against `schema` and reports all violations.
pub fn validate_graph(raw: &RawGraph, schema: &AttributeSchema) -> ValidationReport {
    let m = raw.num_vertices;
    let s = schema.num_attributes();
    let mut violations = Vec::new();

    if raw.attributes.len() != m {
        violations.push(Violation::AttributeRowCount { found: raw.attributes.len(), expected: m });
    }
    for (vertex, row) in raw.attributes.iter().enumerate() {
        if row.len() != s {
            violations.push(Violation::AttributeRowWidth { vertex, found: row.len(), expected: s });
        }
        for (attribute, &value) in row.iter().enumerate().take(s) {
            let cardinality = schema.cardinality(attribute);
            if value >= cardinality {
                violations.push(Violation::AttributeOutOfRange {
                    vertex,
                    attribute,
                    value,
                    cardinality,
                });
            }
        }
    }

    match &raw.adjacency {
        Adjacency::Edges(edges) => {
            let mut seen = HashSet::new();
            for &(u, v) in edges {
                if u >= m || v >= m {
                    violations.push(Violation::EdgeOutOfRange { u, v });
                } else if u == v {
                    violations.push(Violation::SelfLoop { vertex: u });
                } else if !seen.insert((u.min(v), u.max(v))) {
                    violations.push(Violation::DuplicateEdge { u, v });
                }
            }
        }
        Adjacency::Dense(rows) => {
            if rows.len() != m {
                violations.push(Violation::AttributeRowCount { found: rows.len(), expected: m });
            }
            for (u, row) in rows.iter().enumerate() {
                if row.len() != m {
                    violations.push(Violation::AdjacencyShape {
                        row: u,
                        found: row.len(),
                        expected: m,
                    });
                    continue;
                }
                for (v, &value) in row.iter().enumerate() {
                    if value > 1 {
                        violations.push(Violation::NonBinary { u, v, value });
                    }
                    if u == v && value != 0 {
                        violations.push(Violation::SelfLoop { vertex: u });
                    }
                    if v > u {
                        let back = rows.get(v).and_then(|r| r.get(u)).copied();
                        if back != Some(value) {
                            violations.push(Violation::Asymmetric { u, v });
                        }
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// A validated attributed graph. Immutable after construction.
///
/// Adjacency is held twice: as a canonical edge list (`u < v`, sorted) for
/// iteration and as bitset rows for constant-time membership.
#[derive(Debug, Clone)]
pub struct MolecularGraph {
    id: Option<String>,
    schema: Fingerprint,
    num_attributes: usize,
    attrs: Vec<usize>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    rows: Vec<Vec<u64>>,
    label: Option<f64>,
}

impl PartialEq for MolecularGraph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.schema == other.schema
            && self.num_attributes == other.num_attributes
            && self.attrs == other.attrs
            && self.edges == other.edges
            && self.label.map(f64::to_bits) == other.label.map(f64::to_bits)
    }
}

impl MolecularGraph {
    pub fn from_raw(raw: RawGraph, schema: &AttributeSchema) -> Result<Self> {
        let report = validate_graph(&raw, schema);
        if !report.is_ok() {
            return Err(Error::Validation(report));
        }
        let m = raw.num_vertices;
        let edges: Vec<(usize, usize)> = match raw.adjacency {
            Adjacency::Edges(edges) => edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect(),
            Adjacency::Dense(rows) => {
                let mut out = Vec::new();
                for (u, row) in rows.iter().enumerate() {
                    for (v, &x) in row.iter().enumerate().skip(u + 1) {
                        if x == 1 {
                            out.push((u, v));
                        }
                    }
                }
                out
            }
        };
        let attrs = raw.attributes.into_iter().flatten().collect();
        Ok(Self::assemble(raw.id, schema.fingerprint(), schema.num_attributes(), m, attrs, edges, raw.label))
    }

    /// Builds and validates a graph from attribute rows and an edge list.
    pub fn new(
        schema: &AttributeSchema,
        attributes: Vec<Vec<usize>>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        Self::from_raw(
            RawGraph {
                id: None,
                num_vertices: attributes.len(),
                attributes,
                adjacency: Adjacency::Edges(edges.to_vec()),
                label: None,
            },
            schema,
        )
    }

    fn assemble(
        id: Option<String>,
        schema: Fingerprint,
        num_attributes: usize,
        m: usize,
        attrs: Vec<usize>,
        mut edges: Vec<(usize, usize)>,
        label: Option<f64>,
    ) -> Self {
        edges.sort_unstable();
        let words = m.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; m];
        let mut neighbors = vec![Vec::new(); m];
        for &(u, v) in &edges {
            rows[u][v / 64] |= 1 << (v % 64);
            rows[v][u / 64] |= 1 << (u % 64);
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        MolecularGraph { id, schema, num_attributes, attrs, edges, neighbors, rows, label }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_label(mut self, label: Option<f64>) -> Self {
        self.label = label;
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn label(&self) -> Option<f64> {
        self.label
    }

    pub fn schema_fingerprint(&self) -> Fingerprint {
        self.schema
    }

    pub fn num_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.num_attributes
    }

    /// Number of undirected edges `m_e`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn attr(&self, vertex: usize, attribute: usize) -> usize {
        self.attrs[vertex * self.num_attributes + attribute]
    }

    pub fn attr_row(&self, vertex: usize) -> &[usize] {
        &self.attrs[vertex * self.num_attributes..(vertex + 1) * self.num_attributes]
    }

    /// Canonical edge list: `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, vertex: usize) -> &[usize] {
        &self.neighbors[vertex]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u][v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.rows[vertex].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_vertices()).map(|i| self.degree(i)).collect()
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            id: self.id.clone(),
            num_vertices: self.num_vertices(),
            attributes: (0..self.num_vertices()).map(|i| self.attr_row(i).to_vec()).collect(),
            adjacency: Adjacency::Edges(self.edges.clone()),
            label: self.label,
        }
    }

    /// Re-checks the graph against `schema`, including the fingerprint.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        check_schema(self.schema, schema.fingerprint())?;
        let report = validate_graph(&self.to_raw(), schema);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }

    /// Relabels vertices: old vertex `i` becomes new vertex `pi[i]`.
    pub fn permute(&self, pi: &[usize]) -> Result<Self> {
        let m = self.num_vertices();
        check_permutation(pi, m)?;
        let s = self.num_attributes;
        let mut attrs = vec![0; m * s];
        for (old, &new) in pi.iter().enumerate() {
            attrs[new * s..(new + 1) * s].copy_from_slice(self.attr_row(old));
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (pi[u], pi[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        Ok(Self::assemble(self.id.clone(), self.schema, s, m, attrs, edges, self.label))
    }
}

pub(crate) fn check_schema(expected: Fingerprint, found: Fingerprint) -> Result<()> {
    if expected != found {
        return Err(Error::SchemaMismatch { expected: expected.to_hex(), found: found.to_hex() });
    }
    Ok(())
}

pub fn check_permutation(pi: &[usize], m: usize) -> Result<()> {
    if pi.len() != m {
        return Err(Error::InvalidPermutation {
            len: m,
            reason: format!("length {} differs", pi.len()),
        });
    }
    let mut seen = vec![false; m];
    for &p in pi {
        if p >= m {
            return Err(Error::InvalidPermutation { len: m, reason: format!("{p} out of range") });
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation { len: m, reason: format!("{p} repeated") });
        }
    }
    Ok(())
}

pub fn invert_permutation(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (i, &p) in pi.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `pi ∘ rho`: apply `rho` first, then `pi`.
pub fn compose_permutations(pi: &[usize], rho: &[usize]) -> Vec<usize> {
    rho.iter().map(|&r| pi[r]).collect()
}

/// Concatenated one-hot encoding `h_i`: one active index per attribute block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotVector {
    indices: Vec<usize>,
    width: usize,
}

impl OneHotVector {
    /// Active indices, ascending, one per attribute block.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        for &i in &self.indices {
            out[i] = 1.0;
        }
        out
    }
}

pub fn one_hot(g: &MolecularGraph, schema: &AttributeSchema, vertex: usize) -> Result<OneHotVector> {
    if vertex >= g.num_vertices() {
        return Err(Error::VertexOutOfRange { index: vertex, num_vertices: g.num_vertices() });
    }
    check_schema(g.schema_fingerprint(), schema.fingerprint())?;
    let indices = g
        .attr_row(vertex)
        .iter()
        .enumerate()
        .map(|(j, &v)| schema.offset(j) + v)
        .collect();
    Ok(OneHotVector { indices, width: schema.width() })
}

/// JSON graph document. Field order here is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema_id: String,
    pub id: Option<String>,
    pub num_vertices: usize,
    pub attributes: Vec<Vec<usize>>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    /// Dense alternative to `edges` accepted on input; never written.
    #[serde(default, skip_serializing)]
    pub adjacency: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
}

impl GraphDocument {
    pub fn from_graph(g: &MolecularGraph, schema: &AttributeSchema) -> Self {
        GraphDocument {
            schema_id: schema.id().to_string(),
            id: g.id.clone(),
            num_vertices: g.num_vertices(),
            attributes: (0..g.num_vertices()).map(|i| g.attr_row(i).to_vec()).collect(),
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            adjacency: None,
            label: g.label,
        }
    }

    pub fn into_raw(self) -> RawGraph {
        let adjacency = match self.adjacency {
            Some(rows) if self.edges.is_empty() => Adjacency::Dense(rows),
            _ => Adjacency::Edges(self.edges.into_iter().map(|[u, v]| (u, v)).collect()),
        };
        RawGraph {
            id: self.id,
            num_vertices: self.num_vertices,
            attributes: self.attributes,
            adjacency,
            label: self.label,
        }
    }
}
