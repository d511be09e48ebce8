use std::fmt;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Metric;
use super::model::{fit, FitConfig, Task};
use crate::error::{Error, Result};
use crate::graph::MolecularGraph;
use crate::ngram::{embed_corpus, EmbedOptions, Normalization};
use crate::rng::{derive_seed, stream};
use crate::schema::AttributeSchema;
use crate::vertex::{
    extract_contexts, random_embedding, train_cbow, CbowConfig, EntryDistribution, Provenance,
    VertexEmbeddingMatrix,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: Metric,
    /// Absent where the metric is undefined on that fold.
    pub folds: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl EvalReport {
    pub fn from_folds(metric: Metric, folds: Vec<Option<f64>>) -> Self {
        let present: Vec<f64> = folds.iter().flatten().copied().collect();
        let (mean, std) = if present.is_empty() {
            (None, None)
        } else {
            let n = present.len() as f64;
            let mean = present.iter().sum::<f64>() / n;
            let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()))
        };
        EvalReport { metric, folds, mean, std }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        write!(f, "{:<8}", self.metric.name())?;
        for v in &self.folds {
            write!(f, " {:>8}", show(*v))?;
        }
        write!(f, " | mean {} std {}", show(self.mean), show(self.std))
    }
}

/// Fold index for every sample, deterministic in `seed`. With `strata`,
/// each class is dealt round-robin across folds.
pub fn assign_folds(n: usize, k: usize, seed: u64, strata: Option<&[f64]>) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    if n < k {
        return Err(Error::Config(format!("{n} samples cannot fill {k} folds")));
    }
    let mut rng = stream(seed, "folds");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    if let Some(labels) = strata {
        if labels.len() != n {
            return Err(Error::Dimension("strata length differs from sample count".into()));
        }
        order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]));
    }
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

fn rows(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

fn split(folds: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != fold)
}

/// ROC-AUC and PR-AUC for classification, RMSE and MAE for regression.
pub fn default_metrics(task: Task) -> Vec<Metric> {
    match task {
        Task::BinaryLogistic => vec![Metric::RocAuc, Metric::PrAuc],
        Task::LeastSquares => vec![Metric::Rmse, Metric::Mae],
    }
}

/// Log-spaced `1e-4 ..= 1e1`, six points.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..6).map(|i| 10f64.powi(i - 4)).collect()
}

fn score(metric: Metric, pred: &[f64], y: &[f64]) -> Option<f64> {
    metric.compute(pred, y)
}

/// Picks `λ` by inner cross-validation on the first metric. Ties and
/// undefined folds resolve to the larger `λ`.
#[allow(clippy::too_many_arguments)]
pub fn select_lambda(
    x: &Array2<f64>,
    y: &[f64],
    grid: &[f64],
    inner_folds: usize,
    seed: u64,
    cfg: &FitConfig,
    metric: Metric,
    stratify: bool,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let folds = assign_folds(y.len(), inner_folds, seed, stratify.then_some(y))?;
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let c = FitConfig { lambda, ..*cfg };
        let mut total = 0.0;
        let mut count = 0;
        for f in 0..inner_folds {
            let (tr, te) = split(&folds, f);
            let ytr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
            let yte: Vec<f64> = te.iter().map(|&i| y[i]).collect();
            let Ok(model) = fit(rows(x, &tr).view(), &ytr, &c) else { continue };
            if let Some(v) = score(metric, &model.predict(rows(x, &te).view())?, &yte) {
                total += if metric.higher_is_better() { v } else { -v };
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let mean = total / count as f64;
        if best.is_none_or(|(_, b)| mean >= b) {
            best = Some((lambda, mean));
        }
    }
    Ok(best.map_or(grid[grid.len() - 1], |(l, _)| l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub stratified: bool,
    pub fit: FitConfig,
    /// When set, `λ` is chosen per fold by inner cross-validation.
    pub lambda_grid: Option<Vec<f64>>,
    pub inner_folds: usize,
    /// Empty means the task defaults.
    pub metrics: Vec<Metric>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, stratified: false, fit: FitConfig::default(), lambda_grid: None, inner_folds: 3, metrics: vec![] }
    }
}

impl CvConfig {
    fn metrics(&self) -> Vec<Metric> {
        if self.metrics.is_empty() {
            default_metrics(self.fit.task)
        } else {
            self.metrics.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub reports: Vec<EvalReport>,
    pub fold_assignment: Vec<usize>,
    pub lambdas: Vec<f64>,
}

impl CvReport {
    pub fn report(&self, metric: Metric) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.metric == metric)
    }
}

struct FoldOutcome {
    values: Vec<Option<f64>>,
    lambda: f64,
}

fn run_fold(
    xtr: &Array2<f64>,
    ytr: &[f64],
    xte: &Array2<f64>,
    yte: &[f64],
    cfg: &CvConfig,
    metrics: &[Metric],
    seed: u64,
) -> Result<FoldOutcome> {
    let lambda = match &cfg.lambda_grid {
        Some(grid) => select_lambda(xtr, ytr, grid, cfg.inner_folds, seed, &cfg.fit, metrics[0], cfg.stratified)?,
        None => cfg.fit.lambda,
    };
    let model = fit(xtr.view(), ytr, &FitConfig { lambda, ..cfg.fit })?;
    let pred = model.predict(xte.view())?;
    Ok(FoldOutcome { values: metrics.iter().map(|&m| score(m, &pred, yte)).collect(), lambda })
}

fn merge(metrics: &[Metric], outcomes: Vec<FoldOutcome>, folds: Vec<usize>) -> CvReport {
    let reports = metrics
        .iter()
        .enumerate()
        .map(|(mi, &m)| EvalReport::from_folds(m, outcomes.iter().map(|o| o.values[mi]).collect()))
        .collect();
    CvReport { reports, fold_assignment: folds, lambdas: outcomes.iter().map(|o| o.lambda).collect() }
}

/// K-fold evaluation of a linear model on a fixed feature matrix.
pub fn cross_validate(x: &Array2<f64>, y: &[f64], cfg: &CvConfig, seed: u64) -> Result<CvReport> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let folds = assign_folds(y.len(), cfg.folds, seed, cfg.stratified.then_some(y))?;
    let metrics = cfg.metrics();
    let outcomes: Vec<FoldOutcome> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let (tr, te) = split(&folds, f);
            let ytr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
            let yte: Vec<f64> = te.iter().map(|&i| y[i]).collect();
            run_fold(&rows(x, &tr), &ytr, &rows(x, &te), &yte, cfg, &metrics, derive_seed(seed, &format!("fold/{f}")))
        })
        .collect::<Result<_>>()?;
    Ok(merge(&metrics, outcomes, folds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbeddingSource {
    /// Data-independent random `W`.
    Random { r: usize, distribution: EntryDistribution },
    /// `W` trained on each training fold.
    Trained(CbowConfig),
}

impl Default for EmbeddingSource {
    fn default() -> Self {
        EmbeddingSource::Random { r: 100, distribution: EntryDistribution::Gaussian }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub embedding: EmbeddingSource,
    pub embed: EmbedOptions,
    pub cv: CvConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embedding: EmbeddingSource::default(),
            embed: EmbedOptions { normalization: Normalization::UnitL2, ..EmbedOptions::default() },
            cv: CvConfig::default(),
        }
    }
}

/// Builds `W` for one fold from its training graphs only.
fn fold_embedding(
    train: &[MolecularGraph],
    schema: &AttributeSchema,
    source: &EmbeddingSource,
    seed: u64,
) -> Result<VertexEmbeddingMatrix> {
    match source {
        EmbeddingSource::Random { r, distribution } => random_embedding(schema, *r, *distribution, seed),
        EmbeddingSource::Trained(cbow) => {
            let samples = extract_contexts(train, schema)?;
            let cfg = CbowConfig { seed, ..cbow.clone() };
            let (w, _) = train_cbow(schema, &samples, &cfg)?;
            Ok(w)
        }
    }
}

/// Rejects a trained `W` whose training set is not exactly `train`.
pub fn check_fold_provenance(w: &VertexEmbeddingMatrix, train: &[MolecularGraph], schema: &AttributeSchema) -> Result<()> {
    if let Provenance::Trained { dataset_id, .. } = w.provenance() {
        let expected = crate::vertex::dataset_digest(&extract_contexts(train, schema)?);
        if *dataset_id != expected {
            return Err(Error::Precondition(format!(
                "embedding was trained on dataset {dataset_id}, not this training fold ({expected})"
            )));
        }
    }
    Ok(())
}

/// End-to-end K-fold: per fold, build `W` on the training graphs, embed
/// both sides, fit, and score the held-out fold.
pub fn kfold_cv(graphs: &[MolecularGraph], schema: &AttributeSchema, cfg: &PipelineConfig, seed: u64) -> Result<CvReport> {
    let y: Vec<f64> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| g.label().ok_or_else(|| Error::Config(format!("graph {i} has no label"))))
        .collect::<Result<_>>()?;
    let folds = assign_folds(y.len(), cfg.cv.folds, seed, cfg.cv.stratified.then_some(y.as_slice()))?;
    let metrics = cfg.cv.metrics();
    let outcomes: Vec<FoldOutcome> = (0..cfg.cv.folds)
        .into_par_iter()
        .map(|f| {
            let fold_seed = derive_seed(seed, &format!("fold/{f}"));
            let (tr, te) = split(&folds, f);
            let train: Vec<MolecularGraph> = tr.iter().map(|&i| graphs[i].clone()).collect();
            let test: Vec<MolecularGraph> = te.iter().map(|&i| graphs[i].clone()).collect();
            let w = fold_embedding(&train, schema, &cfg.embedding, derive_seed(fold_seed, "embedding"))?;
            check_fold_provenance(&w, &train, schema)?;
            let xtr = embed_corpus(&train, &w, &cfg.embed, fold_seed)?;
            let xte = embed_corpus(&test, &w, &cfg.embed, fold_seed)?;
            if let Some(m) = xtr.manifest.missing.first().or(xte.manifest.missing.first()) {
                return Err(Error::Precondition(format!("graph {} could not be embedded: {}", m.id, m.error)));
            }
            let ytr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
            let yte: Vec<f64> = te.iter().map(|&i| y[i]).collect();
            run_fold(&xtr.data, &ytr, &xte.data, &yte, &cfg.cv, &metrics, fold_seed)
        })
        .collect::<Result<_>>()?;
    Ok(merge(&metrics, outcomes, folds))
}
