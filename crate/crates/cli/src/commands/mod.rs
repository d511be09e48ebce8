//! One module per subcommand.

pub mod embed;
pub mod eval;
pub mod featurize;
pub mod fit;
pub mod oracle_check;
pub mod recover;
pub mod sweep;
pub mod train_vertex;

use std::path::Path;

use anyhow::anyhow;
use clap::Args;
use ndarray::Array2;
use serde_json::Value;

use ngram_graph::ngram::Normalization;
use ngram_graph::predict::{read_features_binary, read_features_csv, CvConfig, EmbeddingSource, Metric, PipelineConfig, Task};
use ngram_graph::vertex::CbowConfig;
use ngram_graph::{FeatureMatrix, WalkVariant};

use crate::error::{CliError, CliResult, Context};
use crate::support::{List, kebab, list};

/// Invocation-wide settings shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub config: Option<Value>,
}

/// `.bin` carries its manifest; a `.csv` needs the sidecar.
pub fn load_features(path: &Path, manifest: Option<&Path>) -> CliResult<FeatureMatrix> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return read_features_binary(path).with_path(path);
    }
    let sidecar = match manifest {
        Some(m) => m.to_path_buf(),
        None => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            path.with_file_name(format!("{stem}.manifest.json"))
        }
    };
    read_features_csv(path, &sidecar).with_path(path)
}

/// Rows that were embedded, optionally only those with a label.
pub struct Rows {
    pub index: Vec<usize>,
    pub x: Array2<f64>,
    pub y: Option<Vec<f64>>,
}

pub fn select_rows(fm: &FeatureMatrix, need_labels: bool) -> CliResult<Rows> {
    let missing: std::collections::BTreeSet<usize> = fm.manifest.missing.iter().map(|m| m.index).collect();
    let index: Vec<usize> = (0..fm.data.nrows()).filter(|i| !missing.contains(i)).collect();
    let labels: Option<Vec<f64>> = index.iter().map(|&i| fm.manifest.labels.get(i).copied().flatten()).collect();
    if need_labels && labels.is_none() {
        return Err(CliError::validation(anyhow!("every embedded graph needs a label; some are unlabeled")));
    }
    let x = fm.data.select(ndarray::Axis(0), &index);
    Ok(Rows { index, x, y: labels })
}

/// Flags shared by the cross-validated commands.
#[derive(Args, Debug, Default)]
pub struct PipelineFlags {
    #[arg(long)]
    pub schema: Option<String>,
    /// Number of outer folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Deal each class across folds
    #[arg(long)]
    pub stratified: bool,
    /// binary-logistic or least-squares
    #[arg(long, value_parser = kebab::<Task>)]
    pub task: Option<Task>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Inner-CV grid for lambda, comma separated
    #[arg(long, value_parser = list::<f64>)]
    pub lambda_grid: Option<List<f64>>,
    /// Metrics, comma separated (rmse, mae, roc-auc, pr-auc)
    #[arg(long, value_parser = list::<Metric>)]
    pub metrics: Option<List<Metric>>,
    /// Train the vertex embedding per fold instead of drawing it at random
    #[arg(long)]
    pub trained: bool,
    /// Training epochs for a trained embedding
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_parser = kebab::<WalkVariant>)]
    pub variant: Option<WalkVariant>,
    #[arg(long, value_parser = kebab::<Normalization>)]
    pub normalize: Option<Normalization>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub schema: String,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings { schema: "full".into(), pipeline: PipelineConfig::default() }
    }
}

impl PipelineFlags {
    pub fn apply(&self, s: &mut PipelineSettings) {
        if let Some(v) = &self.schema {
            s.schema = v.clone();
        }
        let p = &mut s.pipeline;
        let cv: &mut CvConfig = &mut p.cv;
        if let Some(v) = self.folds {
            cv.folds = v;
        }
        if self.stratified {
            cv.stratified = true;
        }
        if let Some(v) = self.task {
            cv.fit.task = v;
        }
        if let Some(v) = self.lambda {
            cv.fit.lambda = v;
        }
        if self.lambda_grid.is_some() {
            cv.lambda_grid = self.lambda_grid.clone();
        }
        if let Some(v) = &self.metrics {
            cv.metrics = v.clone();
        }
        if self.trained {
            if let EmbeddingSource::Random { r, .. } = p.embedding {
                p.embedding = EmbeddingSource::Trained(CbowConfig { r, ..CbowConfig::default() });
            }
        }
        if let (Some(v), EmbeddingSource::Trained(c)) = (self.epochs, &mut p.embedding) {
            c.epochs = v;
        }
        if let Some(v) = self.variant {
            p.embed.variant = v;
        }
        if let Some(v) = self.normalize {
            p.embed.normalization = v;
        }
    }
}

pub fn set_r(p: &mut PipelineConfig, r: usize) {
    match &mut p.embedding {
        EmbeddingSource::Random { r: rr, .. } => *rr = r,
        EmbeddingSource::Trained(c) => c.r = r,
    }
}
