//! Config merging, schema and graph loading, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use ngram_graph::ingest::read_json_graphs;
use ngram_graph::{AttributeSchema, MolecularGraph};

use crate::error::{CliError, CliResult, Context};

/// clap value parser for the library's kebab-case enums.
pub fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Alias so clap takes a parsed list as one value rather than a repeated flag.
pub type List<T> = Vec<T>;

/// Comma-separated list parser.
pub fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

/// Settings for one subcommand: the `--config` file if any, else defaults.
/// Flags are applied on top by the caller.
pub fn base_settings<T: DeserializeOwned + Default>(config: Option<&Value>) -> CliResult<T> {
    match config {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::io(e).context("--config")),
        None => Ok(T::default()),
    }
}

pub fn read_config(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).with_path(path)?;
    serde_json::from_str(&text).with_path(path)
}

/// `full`, `reduced`, or a path to a schema JSON document.
pub fn load_schema(choice: &str) -> CliResult<AttributeSchema> {
    match choice {
        "full" => Ok(AttributeSchema::full()),
        "reduced" => Ok(AttributeSchema::reduced()),
        path => {
            let p = Path::new(path);
            let text = fs::read_to_string(p).with_path(p)?;
            serde_json::from_str(&text).with_path(p)
        }
    }
}

/// Reads graph documents; any invalid document is a validation failure.
pub fn load_graphs(path: &Path, schema: &AttributeSchema) -> CliResult<Vec<MolecularGraph>> {
    let file = fs::File::open(path).with_path(path)?;
    let docs = read_json_graphs(BufReader::new(file), schema).with_path(path)?;
    let mut graphs = Vec::with_capacity(docs.len());
    for doc in docs {
        match doc {
            Ok(g) => graphs.push(g),
            Err(e) => {
                return Err(CliError::validation(anyhow::anyhow!("document {}: {}", e.index, e.message))
                    .context(format!("{}", path.display())))
            }
        }
    }
    Ok(graphs)
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let mut f = fs::File::open(path).with_path(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).with_path(path)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn hash_inputs(paths: &[&Path]) -> CliResult<BTreeMap<String, String>> {
    paths.iter().map(|p| Ok((p.display().to_string(), hash_file(p)?))).collect()
}

/// What was run, serialized verbatim into every output manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub settings: Value,
}

impl RunConfig {
    pub fn new(subcommand: &str, seed: u64, inputs: &[&Path], output: Option<&Path>, settings: &impl Serialize) -> Self {
        RunConfig {
            subcommand: subcommand.to_string(),
            seed,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            output: output.map(|p| p.display().to_string()),
            settings: serde_json::to_value(settings).expect("settings serialize"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, X: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub run: &'a RunConfig,
    pub input_hashes: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: X,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes `<output>.manifest.json` next to `output`.
pub fn write_manifest<X: Serialize>(output: &Path, run: &RunConfig, inputs: &[&Path], extra: X) -> CliResult<PathBuf> {
    let manifest = Manifest {
        tool: "ngg",
        version: env!("CARGO_PKG_VERSION"),
        run,
        input_hashes: hash_inputs(inputs)?,
        extra,
    };
    let path = manifest_path(output);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_path(&path)?;
    Ok(path)
}

pub fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_path(dir)?;
    }
    Ok(())
}
