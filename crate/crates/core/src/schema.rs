//! Discrete vertex attribute schemas.
//!
//! A schema fixes the number of attributes `S`, the cardinality `k_j` of each
//! attribute and therefore the one-hot width `K = sum k_j`. Graphs store
//! attribute values as indices against a schema, and every artifact derived
//! from a schema carries its [`Fingerprint`] so data is never read against the
//! wrong vocabulary.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Token used as the catch-all value of an attribute.
pub const UNKNOWN: &str = "Unknown";

/// SHA-256 digest of a schema's canonical JSON form.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Format(format!("bad fingerprint: {e}")))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Format("fingerprint must be 32 bytes".into()))?;
        Ok(Fingerprint(arr))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Fingerprint::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct AttributeSchema {
    id: String,
    attributes: Vec<Attribute>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    id: String,
    attributes: Vec<Attribute>,
}

impl TryFrom<SchemaDoc> for AttributeSchema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Self> {
        AttributeSchema::new(doc.id, doc.attributes)
    }
}

impl From<AttributeSchema> for SchemaDoc {
    fn from(s: AttributeSchema) -> Self {
        SchemaDoc { id: s.id, attributes: s.attributes }
    }
}

impl AttributeSchema {
    pub fn new(id: impl Into<String>, attributes: Vec<Attribute>) -> Result<Self> {
        let id = id.into();
        if attributes.is_empty() {
            return Err(Error::Schema("schema needs at least one attribute".into()));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name {:?}", attr.name)));
            }
            if attr.values.len() < 2 {
                return Err(Error::Schema(format!(
                    "attribute {:?} needs at least 2 values, has {}",
                    attr.name,
                    attr.values.len()
                )));
            }
            let mut seen = HashSet::new();
            for v in &attr.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate value {v:?} in attribute {:?}",
                        attr.name
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(attributes.len());
        let mut acc = 0;
        for attr in &attributes {
            offsets.push(acc);
            acc += attr.values.len();
        }
        Ok(AttributeSchema { id, attributes, offsets })
    }

    /// Schema whose attribute `j` takes the values `"0"..k_j`. Handy for
    /// synthetic corpora and tests.
    pub fn uniform(id: impl Into<String>, cardinalities: &[usize]) -> Result<Self> {
        let attributes = cardinalities
            .iter()
            .enumerate()
            .map(|(j, &k)| Attribute {
                name: format!("a{j}"),
                values: (0..k).map(|v| v.to_string()).collect(),
            })
            .collect();
        Self::new(id, attributes)
    }

    /// The 8-attribute, 42-feature atom schema.
    pub fn full() -> Self {
        Self::new(
            "ngram-atom-full-42",
            vec![
                attr("atom symbol", &["C", "Cl", "I", "F", "O", "N", "P", "S", "Br", UNKNOWN]),
                attr("atom degree", &["0", "1", "2", "3", "4", "5", UNKNOWN]),
                attr("number of hydrogen", &["0", "1", "2", "3", "4", "5", UNKNOWN]),
                attr("implicit valence", &["0", "1", "2", "3", "4", UNKNOWN]),
                attr("atom charge", &["-2", "-1", "0", "1", "2", UNKNOWN]),
                attr("is aromatic", &["no", "yes"]),
                attr("is acceptor", &["no", "yes"]),
                attr("is donor", &["no", "yes"]),
            ],
        )
        .expect("bundled schema is valid")
    }

    /// The 5-attribute, 32-feature atom schema used when hydrogen and
    /// donor/acceptor information is unavailable.
    pub fn reduced() -> Self {
        Self::new(
            "ngram-atom-reduced-32",
            vec![
                attr("atom symbol", &["C", "Cl", "I", "F", "O", "N", "P", "S", "Br", UNKNOWN]),
                attr("atom degree", &["0", "1", "2", "3", "4", "5", UNKNOWN]),
                attr("implicit valence", &["0", "1", "2", "3", "4", "5", UNKNOWN]),
                attr("atom charge", &["-2", "-1", "0", "1", "2", UNKNOWN]),
                attr("is aromatic", &["no", "yes"]),
            ],
        )
        .expect("bundled schema is valid")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Number of attributes `S`.
    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    /// Cardinality `k_j` of attribute `j`.
    pub fn cardinality(&self, j: usize) -> usize {
        self.attributes[j].values.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.attributes.iter().map(|a| a.values.len()).collect()
    }

    /// Start of attribute `j`'s block inside the one-hot vector.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// One-hot width `K`.
    pub fn width(&self) -> usize {
        self.offsets.last().unwrap() + self.attributes.last().unwrap().values.len()
    }

    pub fn value_index(&self, j: usize, token: &str) -> Option<usize> {
        self.attributes[j].values.iter().position(|v| v == token)
    }

    /// Index of attribute `j`'s catch-all value, if it has one.
    pub fn unknown_index(&self, j: usize) -> Option<usize> {
        let values = &self.attributes[j].values;
        (values.last().map(String::as_str) == Some(UNKNOWN)).then(|| values.len() - 1)
    }

    /// Maps `token` to its index, falling back to the Unknown value.
    pub fn value_or_unknown(&self, j: usize, token: &str) -> Option<usize> {
        self.value_index(j, token).or_else(|| self.unknown_index(j))
    }

    /// Column labels `name=value` in one-hot order.
    pub fn column_labels(&self) -> Vec<String> {
        self.attributes
            .iter()
            .flat_map(|a| a.values.iter().map(move |v| format!("{}={}", a.name, v)))
            .collect()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let doc = SchemaDoc { id: self.id.clone(), attributes: self.attributes.clone() };
        let bytes = serde_json::to_vec(&doc).expect("schema serializes");
        Fingerprint(Sha256::digest(&bytes).into())
    }
}

fn attr(name: &str, values: &[&str]) -> Attribute {
    Attribute { name: name.to_string(), values: values.iter().map(|v| v.to_string()).collect() }
}
