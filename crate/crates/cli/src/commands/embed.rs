use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ngram_graph::features::{export_features, ExportFormat};
use ngram_graph::ngram::{LevelScaling, Normalization};
use ngram_graph::vertex::load_embedding;
use ngram_graph::{embed_corpus, EmbedOptions, WalkVariant};

use super::Ctx;
use crate::error::{CliResult, Context};
use crate::support::{base_settings, hash_inputs, kebab, load_graphs, load_schema, RunConfig};

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(short, long)]
    graphs: PathBuf,
    /// Vertex embedding file from train-vertex
    #[arg(short, long)]
    embedding: PathBuf,
    #[arg(long)]
    schema: Option<String>,
    /// Longest walk length
    #[arg(long = "T", visible_alias = "t")]
    t: Option<usize>,
    /// walk, path or simple-path
    #[arg(long, value_parser = kebab::<WalkVariant>)]
    variant: Option<WalkVariant>,
    /// none, unit-l2 or unit-l2-per-level
    #[arg(long, value_parser = kebab::<Normalization>)]
    normalize: Option<Normalization>,
    /// none, inverse-factorial or inverse-count
    #[arg(long, value_parser = kebab::<LevelScaling>)]
    scaling: Option<LevelScaling>,
    #[arg(short, long)]
    output_dir: PathBuf,
    #[arg(long)]
    stem: Option<String>,
    /// csv, binary or both
    #[arg(long, value_parser = kebab::<ExportFormat>)]
    format: Option<ExportFormat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    schema: String,
    #[serde(flatten)]
    embed: EmbedOptions,
    stem: String,
    format: ExportFormat,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { schema: "full".into(), embed: EmbedOptions::default(), stem: "features".into(), format: ExportFormat::Both }
    }
}

pub fn run(args: EmbedArgs, ctx: &Ctx) -> CliResult {
    let mut s: Settings = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.schema {
        s.schema = v;
    }
    if let Some(v) = args.t {
        s.embed.t = v;
    }
    if let Some(v) = args.variant {
        s.embed.variant = v;
    }
    if let Some(v) = args.normalize {
        s.embed.normalization = v;
    }
    if let Some(v) = args.scaling {
        s.embed.scaling = v;
    }
    if let Some(v) = args.stem {
        s.stem = v;
    }
    if let Some(v) = args.format {
        s.format = v;
    }

    let schema = load_schema(&s.schema)?;
    let graphs = load_graphs(&args.graphs, &schema)?;
    let w = load_embedding(&args.embedding, &schema).with_path(&args.embedding)?;
    let mut fm = embed_corpus(&graphs, &w, &s.embed, ctx.seed)?;
    let inputs = [args.graphs.as_path(), args.embedding.as_path()];
    let run = RunConfig::new("embed", ctx.seed, &inputs, Some(&args.output_dir), &s);
    fm.manifest.config = serde_json::to_value(&run)?;
    fm.manifest.input_hashes = hash_inputs(&inputs)?;
    for m in &fm.manifest.missing {
        eprintln!("graph {} ({}) failed: {}", m.index, m.id, m.error);
    }
    let files = export_features(&fm, &args.output_dir, &s.stem, s.format).with_path(&args.output_dir)?;
    eprintln!(
        "embedded {} graphs, width {} (r={}, T={}), manifest {}",
        fm.manifest.num_graphs,
        fm.manifest.width,
        fm.manifest.r,
        fm.manifest.t,
        files.manifest.display()
    );
    Ok(())
}
