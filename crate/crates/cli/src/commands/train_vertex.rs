use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ngram_graph::rng::derive_seed;
use ngram_graph::vertex::{extract_contexts, save_embedding, train_cbow, Aggregator, CbowConfig};

use super::Ctx;
use crate::error::{CliResult, Context};
use crate::support::{List, base_settings, create_parent, kebab, list, load_graphs, load_schema, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct TrainVertexArgs {
    /// Graph documents (JSON/JSONL)
    #[arg(short, long)]
    graphs: PathBuf,
    /// Output embedding file
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    schema: Option<String>,
    /// Embedding dimension
    #[arg(long)]
    r: Option<usize>,
    /// sum or mean
    #[arg(long, value_parser = kebab::<Aggregator>)]
    aggregator: Option<Aggregator>,
    /// Hidden layer widths, comma separated (empty for none)
    #[arg(long, value_parser = list::<usize>, allow_hyphen_values = true)]
    hidden: Option<List<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Fraction of contexts held out for the accuracy report
    #[arg(long)]
    holdout: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    schema: String,
    #[serde(flatten)]
    cbow: CbowConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { schema: "full".into(), cbow: CbowConfig::default() }
    }
}

pub fn run(args: TrainVertexArgs, ctx: &Ctx) -> CliResult {
    let mut s: Settings = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.schema {
        s.schema = v;
    }
    let c = &mut s.cbow;
    if let Some(v) = args.r {
        c.r = v;
    }
    if let Some(v) = args.aggregator {
        c.aggregator = v;
    }
    if let Some(v) = args.hidden {
        c.hidden = v;
    }
    if let Some(v) = args.epochs {
        c.epochs = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.lr {
        c.learning_rate = v;
    }
    if let Some(v) = args.holdout {
        c.holdout_fraction = v;
    }
    c.seed = derive_seed(ctx.seed, "train-vertex/cbow");
    c.validate()?;

    let schema = load_schema(&s.schema)?;
    let graphs = load_graphs(&args.graphs, &schema)?;
    let samples = extract_contexts(&graphs, &schema)?;
    let (w, report) = train_cbow(&schema, &samples, &s.cbow)?;

    let last_loss = report.epochs.last().map(|e| e.loss);
    match (&report.heldout_accuracy, last_loss) {
        (Some(acc), _) => eprintln!(
            "trained on {} contexts, held-out accuracy {:.4} (per attribute {:?})",
            report.train_samples,
            acc.mean,
            acc.per_attribute.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
        (None, Some(loss)) => eprintln!("trained on {} contexts, final loss {loss:.6}", report.train_samples),
        (None, None) => eprintln!("no training epochs; wrote the random initialization"),
    }

    create_parent(&args.output)?;
    save_embedding(&args.output, &w).with_path(&args.output)?;
    let run = RunConfig::new("train-vertex", ctx.seed, &[&args.graphs], Some(&args.output), &s);
    write_manifest(
        &args.output,
        &run,
        &[&args.graphs],
        serde_json::json!({ "schema_id": schema.id(), "provenance": w.provenance(), "training": report }),
    )?;
    Ok(())
}
