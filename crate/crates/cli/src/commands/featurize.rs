use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ngram_graph::ingest::{
    featurize, parse_sdf, read_json_graphs, to_canonical_json, FeaturizerConfig, InputFormat, SchemaChoice,
};
use ngram_graph::MolecularGraph;

use super::Ctx;
use crate::error::{CliError, CliResult, Context};
use crate::support::{base_settings, create_parent, load_schema, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// SDF (V2000) or JSON/JSONL graph file
    #[arg(short, long)]
    input: PathBuf,
    /// Output JSONL of graph documents
    #[arg(short, long)]
    output: PathBuf,
    /// full, reduced, or a schema JSON file (JSON input only)
    #[arg(long)]
    schema: Option<String>,
    /// SD data item holding a numeric label
    #[arg(long)]
    label_field: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    schema: String,
    label_field: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { schema: "full".into(), label_field: None }
    }
}

#[derive(Serialize)]
struct Summary {
    parsed: usize,
    failed: usize,
    min_vertices: usize,
    mean_vertices: f64,
    max_vertices: usize,
    failures: Vec<String>,
}

pub fn run(args: FeaturizeArgs, ctx: &Ctx) -> CliResult {
    let mut s: Settings = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.schema {
        s.schema = v;
    }
    if args.label_field.is_some() {
        s.label_field = args.label_field.clone();
    }
    let format = InputFormat::from_path(&args.input).map_err(|e| CliError::io(anyhow::anyhow!(e)))?;
    let text_len = fs::metadata(&args.input).with_path(&args.input)?.len();
    if text_len == 0 {
        return Err(CliError::io(anyhow::anyhow!("{} is empty", args.input.display())));
    }
    let schema = load_schema(&s.schema)?;
    let reader = BufReader::new(fs::File::open(&args.input).with_path(&args.input)?);

    let mut graphs: Vec<MolecularGraph> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    match format {
        InputFormat::Sdf => {
            let choice = match s.schema.as_str() {
                "full" => SchemaChoice::Full,
                "reduced" => SchemaChoice::Reduced,
                other => {
                    return Err(CliError::validation(anyhow::anyhow!(
                        "SDF input needs --schema full or reduced, got {other:?}"
                    )))
                }
            };
            let cfg = FeaturizerConfig::with_schema(choice);
            for (i, rec) in parse_sdf(reader).with_path(&args.input)?.into_iter().enumerate() {
                let rec = match rec {
                    Ok(r) => r,
                    Err(e) => {
                        failures.push(format!("record {i}: {e}"));
                        continue;
                    }
                };
                let label = match &s.label_field {
                    Some(field) => match rec.data.get(field).map(|v| v.trim().parse::<f64>()) {
                        Some(Ok(v)) => Some(v),
                        Some(Err(_)) | None => {
                            failures.push(format!("record {i} ({}): no numeric {field:?} item", rec.name));
                            continue;
                        }
                    },
                    None => None,
                };
                match featurize(&rec, &cfg) {
                    Ok(fm) => {
                        for w in &fm.warnings {
                            eprintln!("warning: record {i} ({}): {w}", rec.name);
                        }
                        graphs.push(fm.graph.with_label(label));
                    }
                    Err(e) => failures.push(format!("record {i} ({}): {e}", rec.name)),
                }
            }
        }
        InputFormat::Json => {
            for doc in read_json_graphs(reader, &schema).with_path(&args.input)? {
                match doc {
                    Ok(g) => graphs.push(g),
                    Err(e) => failures.push(format!("document {}: {}", e.index, e.message)),
                }
            }
        }
    }

    for f in &failures {
        eprintln!("skipped {f}");
    }
    let sizes: Vec<usize> = graphs.iter().map(MolecularGraph::num_vertices).collect();
    let summary = Summary {
        parsed: graphs.len(),
        failed: failures.len(),
        min_vertices: sizes.iter().copied().min().unwrap_or(0),
        mean_vertices: if sizes.is_empty() { 0.0 } else { sizes.iter().sum::<usize>() as f64 / sizes.len() as f64 },
        max_vertices: sizes.iter().copied().max().unwrap_or(0),
        failures,
    };
    eprintln!(
        "parsed {}, failed {}, vertices min/mean/max {}/{:.2}/{}",
        summary.parsed, summary.failed, summary.min_vertices, summary.mean_vertices, summary.max_vertices
    );
    if graphs.is_empty() {
        return Err(CliError::io(anyhow::anyhow!("no graph could be read from {}", args.input.display())));
    }

    create_parent(&args.output)?;
    let mut out = BufWriter::new(fs::File::create(&args.output).with_path(&args.output)?);
    for g in &graphs {
        writeln!(out, "{}", to_canonical_json(g, &schema)).with_path(&args.output)?;
    }
    out.flush().with_path(&args.output)?;
    let run = RunConfig::new("featurize", ctx.seed, &[&args.input], Some(&args.output), &s);
    write_manifest(&args.output, &run, &[&args.input], serde_json::json!({ "schema_id": schema.id(), "summary": summary }))?;
    Ok(())
}
