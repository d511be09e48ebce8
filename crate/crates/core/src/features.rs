//! Graph-level feature matrices, their manifests, and CSV/binary I/O.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::{self, MatrixKind};
use crate::ngram::{LevelScaling, Normalization, WalkVariant};
use crate::schema::Fingerprint;
use crate::vertex::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRow {
    pub index: usize,
    pub id: String,
    pub error: String,
}

/// Everything needed to regenerate a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub schema_id: String,
    pub schema_fingerprint: Fingerprint,
    pub embedding: Provenance,
    pub r: usize,
    pub t: usize,
    pub variant: WalkVariant,
    pub scaling: LevelScaling,
    pub normalization: Normalization,
    pub seed: u64,
    pub num_graphs: usize,
    pub width: usize,
    pub ids: Vec<String>,
    pub labels: Vec<Option<f64>>,
    #[serde(default)]
    pub missing: Vec<MissingRow>,
    /// Free-form run configuration recorded by the caller.
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub input_hashes: BTreeMap<String, String>,
}

/// Rows are graphs in input order; missing rows are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub manifest: FeatureManifest,
}

impl FeatureMatrix {
    pub fn column_names(t: usize, r: usize) -> Vec<String> {
        (1..=t).flat_map(|n| (0..r).map(move |d| format!("f_{n}_{d}"))).collect()
    }

    pub fn labels(&self) -> &[Option<f64>] {
        &self.manifest.labels
    }

    pub fn check_consistent(&self) -> Result<()> {
        let m = &self.manifest;
        if m.width != m.t * m.r || self.data.ncols() != m.width {
            return Err(Error::Format(format!(
                "feature width {} disagrees with manifest T*r = {}*{}",
                self.data.ncols(),
                m.t,
                m.r
            )));
        }
        if self.data.nrows() != m.num_graphs || m.ids.len() != m.num_graphs || m.labels.len() != m.num_graphs {
            return Err(Error::Format("row count disagrees with manifest".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Csv,
    Binary,
    #[default]
    Both,
}

/// Paths written by [`export_features`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedFiles {
    pub csv: Option<PathBuf>,
    pub binary: Option<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes `<stem>.csv` and/or `<stem>.bin` plus the `<stem>.manifest.json` sidecar.
pub fn export_features(fm: &FeatureMatrix, dir: &Path, stem: &str, format: ExportFormat) -> Result<ExportedFiles> {
    fm.check_consistent()?;
    fs::create_dir_all(dir)?;
    let mut files = ExportedFiles { csv: None, binary: None, manifest: dir.join(format!("{stem}.manifest.json")) };
    if matches!(format, ExportFormat::Csv | ExportFormat::Both) {
        let path = dir.join(format!("{stem}.csv"));
        write_features_csv(fs::File::create(&path)?, fm)?;
        files.csv = Some(path);
    }
    if matches!(format, ExportFormat::Binary | ExportFormat::Both) {
        let path = dir.join(format!("{stem}.bin"));
        matrix_io::write(&path, MatrixKind::Features, &fm.data, &serde_json::to_value(&fm.manifest)?)?;
        files.binary = Some(path);
    }
    fs::write(&files.manifest, serde_json::to_string_pretty(&fm.manifest)?)?;
    Ok(files)
}

/// Reads a binary feature file; the manifest travels inside it.
pub fn read_features_binary(path: &Path) -> Result<FeatureMatrix> {
    let (data, meta) = matrix_io::read(path, MatrixKind::Features)?;
    let manifest: FeatureManifest = serde_json::from_value(meta)?;
    let fm = FeatureMatrix { data, manifest };
    fm.check_consistent()?;
    Ok(fm)
}

/// Reads a feature CSV together with its manifest sidecar.
pub fn read_features_csv(csv: &Path, manifest: &Path) -> Result<FeatureMatrix> {
    let manifest: FeatureManifest = serde_json::from_slice(&fs::read(manifest)?)?;
    let reader = BufReader::new(fs::File::open(csv)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty feature csv".into()))??;
    let expected = std::iter::once("g_id".to_string())
        .chain(FeatureMatrix::column_names(manifest.t, manifest.r))
        .collect::<Vec<_>>()
        .join(",");
    if header != expected {
        return Err(Error::Format("feature csv header does not match manifest".into()));
    }
    let mut values = Vec::with_capacity(manifest.num_graphs * manifest.width);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default();
        if manifest.ids.get(i).map(String::as_str) != Some(id) {
            return Err(Error::Format(format!("row {i}: id {id:?} not in manifest order")));
        }
        let before = values.len();
        for f in fields {
            values.push(f.parse::<f64>().map_err(|e| Error::Format(format!("row {i}: {e}")))?);
        }
        if values.len() - before != manifest.width {
            return Err(Error::Format(format!("row {i}: wrong field count")));
        }
        rows += 1;
    }
    let data = Array2::from_shape_vec((rows, manifest.width), values).map_err(|e| Error::Format(e.to_string()))?;
    let fm = FeatureMatrix { data, manifest };
    fm.check_consistent()?;
    Ok(fm)
}

pub fn write_features_csv<W: Write>(out: W, fm: &FeatureMatrix) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    write!(out, "g_id")?;
    for name in FeatureMatrix::column_names(fm.manifest.t, fm.manifest.r) {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (id, row) in fm.manifest.ids.iter().zip(fm.data.rows()) {
        if id.contains([',', '\n', '"']) {
            return Err(Error::Format(format!("graph id {id:?} cannot be written to csv")));
        }
        write!(out, "{id}")?;
        for x in row {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
