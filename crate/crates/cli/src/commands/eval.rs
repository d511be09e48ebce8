use std::fs;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use ngram_graph::predict::{default_metrics, kfold_cv, EvalReport, LinearModel, Metric};
use ngram_graph::rng::derive_seed;

use super::{load_features, select_rows, Ctx, PipelineFlags, PipelineSettings};
use crate::error::{CliError, CliResult, Context};
use crate::support::{base_settings, create_parent, hash_file, load_graphs, load_schema, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Saved model from fit (with --features)
    #[arg(short, long, requires = "features", conflicts_with = "graphs")]
    model: Option<PathBuf>,
    #[arg(short, long)]
    features: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Labelled graphs for end-to-end cross-validation
    #[arg(short, long)]
    graphs: Option<PathBuf>,
    /// JSON report
    #[arg(short, long)]
    output: PathBuf,
    /// Embedding dimension for cross-validation
    #[arg(long)]
    r: Option<usize>,
    #[arg(long = "T", visible_alias = "t")]
    t: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Serialize)]
struct ModelReport {
    model_hash: String,
    manifest_hash_matches: bool,
    ids: Vec<String>,
    predictions: Vec<f64>,
    metrics: Vec<MetricValue>,
}

#[derive(Serialize)]
struct MetricValue {
    metric: Metric,
    value: Option<f64>,
}

pub fn run(args: EvalArgs, ctx: &Ctx) -> CliResult {
    match (&args.model, &args.graphs) {
        (Some(_), _) => eval_model(args, ctx),
        (None, Some(_)) => eval_cv(args, ctx),
        (None, None) => Err(CliError::validation(anyhow!("give --model with --features, or --graphs"))),
    }
}

fn eval_model(args: EvalArgs, ctx: &Ctx) -> CliResult {
    let model_path = args.model.as_deref().expect("model given");
    let features = args.features.as_deref().expect("clap requires features");
    let text = fs::read_to_string(model_path).with_path(model_path)?;
    let model = LinearModel::from_json(&text).with_path(model_path)?;
    let fm = load_features(features, args.manifest.as_deref())?;
    let rows = select_rows(&fm, false)?;
    let predictions = model.predict(rows.x.view())?;
    let feature_hash = hash_file(features)?;
    let matches = model.manifest_hash.as_deref() == Some(feature_hash.as_str());
    let metrics = match (&rows.y, &args.pipeline.metrics) {
        (Some(y), chosen) => {
            let chosen = chosen.clone().unwrap_or_else(|| default_metrics(model.task));
            chosen.into_iter().map(|m| MetricValue { metric: m, value: m.compute(&predictions, y) }).collect()
        }
        (None, _) => Vec::new(),
    };
    for m in &metrics {
        println!("{:<8} {}", m.metric.name(), m.value.map_or_else(|| "undefined".into(), |x| format!("{x:.4}")));
    }
    let report = ModelReport {
        model_hash: hash_file(model_path)?,
        manifest_hash_matches: matches,
        ids: rows.index.iter().map(|&i| fm.manifest.ids[i].clone()).collect(),
        predictions,
        metrics,
    };
    create_parent(&args.output)?;
    fs::write(&args.output, serde_json::to_string_pretty(&report)? + "\n").with_path(&args.output)?;
    let mut inputs = vec![model_path, features];
    if let Some(m) = &args.manifest {
        inputs.push(m.as_path());
    }
    let run = RunConfig::new("eval", ctx.seed, &inputs, Some(&args.output), &serde_json::Value::Null);
    write_manifest(&args.output, &run, &inputs, serde_json::json!({}))?;
    Ok(())
}

fn eval_cv(args: EvalArgs, ctx: &Ctx) -> CliResult {
    let graphs_path = args.graphs.as_deref().expect("graphs given");
    let mut s: PipelineSettings = base_settings(ctx.config.as_ref())?;
    args.pipeline.apply(&mut s);
    if let Some(r) = args.r {
        super::set_r(&mut s.pipeline, r);
    }
    if let Some(t) = args.t {
        s.pipeline.embed.t = t;
    }
    let schema = load_schema(&s.schema)?;
    let graphs = load_graphs(graphs_path, &schema)?;
    let report = kfold_cv(&graphs, &schema, &s.pipeline, derive_seed(ctx.seed, "eval/cv"))?;
    print_reports(&report.reports);
    create_parent(&args.output)?;
    fs::write(&args.output, serde_json::to_string_pretty(&report)? + "\n").with_path(&args.output)?;
    let run = RunConfig::new("eval", ctx.seed, &[graphs_path], Some(&args.output), &s);
    write_manifest(&args.output, &run, &[graphs_path], serde_json::json!({}))?;
    Ok(())
}

pub fn print_reports(reports: &[EvalReport]) {
    if let Some(first) = reports.first() {
        let header: String = (1..=first.folds.len()).map(|f| format!(" {:>8}", format!("fold{f}"))).collect();
        println!("{:<8}{header}", "metric");
    }
    for r in reports {
        println!("{r}");
    }
}
