//! Reading molecules from CTfile (V2000) and JSON graph documents.

mod featurize;
mod json;
mod sdf;

use std::path::Path;

pub use featurize::{featurize, FeaturizedMolecule, FeaturizerConfig, SchemaChoice};
pub use json::{read_json_graphs, to_canonical_json, write_json_graphs, DocumentError};
pub use sdf::{parse_sdf, parse_sdf_str, Atom, Bond, MolRecord, SdfError, SdfErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Sdf,
    Json,
}

impl InputFormat {
    /// Picks a reader from the file extension. SMILES is refused.
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "sdf" | "mol" | "sd" => Ok(InputFormat::Sdf),
            "json" | "jsonl" | "ndjson" => Ok(InputFormat::Json),
            "smi" | "smiles" | "ism" => Err(format!(
                "SMILES input is not supported ({}); convert to SDF/MOL (V2000) or JSON graph documents",
                path.display()
            )),
            other => Err(format!(
                "unrecognized input extension {other:?} for {}; expected .sdf, .mol, .json or .jsonl",
                path.display()
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_from_extension() {
        assert_eq!(InputFormat::from_path(Path::new("a.SDF")), Ok(InputFormat::Sdf));
        assert_eq!(InputFormat::from_path(Path::new("a.jsonl")), Ok(InputFormat::Json));
        let err = InputFormat::from_path(Path::new("a.smi")).unwrap_err();
        assert!(err.contains("SDF"));
        assert!(InputFormat::from_path(Path::new("a.xyz")).is_err());
    }
}
