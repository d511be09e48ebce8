use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ngram_graph::ngram::{graph_embed_exact, oracle_embed_exact, oracle_embed_with, OracleOptions, DEFAULT_ORACLE_CAP};
use ngram_graph::rng::derive_seed;
use ngram_graph::vertex::{load_embedding, random_embedding_scaled, EntryDistribution};
use ngram_graph::{graph_embed_with, EmbedOptions, MolecularGraph, VertexEmbeddingMatrix, WalkVariant};

use super::Ctx;
use crate::error::{CliError, CliResult, Context};
use crate::support::{base_settings, kebab, load_graphs, load_schema};

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[arg(short, long)]
    graphs: PathBuf,
    /// Vertex embedding file; a random integer one is drawn if absent
    #[arg(short, long)]
    embedding: Option<PathBuf>,
    #[arg(long)]
    schema: Option<String>,
    #[arg(long = "T", visible_alias = "t")]
    t: Option<usize>,
    #[arg(long, value_parser = kebab::<WalkVariant>)]
    variant: Option<WalkVariant>,
    /// Largest graph the brute-force enumeration accepts
    #[arg(long)]
    cap: Option<usize>,
    /// Dimension of the random embedding
    #[arg(long)]
    r: Option<usize>,
    /// Relative tolerance for non-integer embeddings
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    schema: String,
    t: usize,
    variant: WalkVariant,
    cap: usize,
    r: usize,
    tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            schema: "full".into(),
            t: 4,
            variant: WalkVariant::Walk,
            cap: DEFAULT_ORACLE_CAP,
            r: 8,
            tolerance: 1e-9,
        }
    }
}

struct Residual {
    abs: f64,
    rel: f64,
}

fn check_one(g: &MolecularGraph, w: &VertexEmbeddingMatrix, s: &Settings, exact: bool) -> ngram_graph::Result<Residual> {
    let opts = OracleOptions { cap: s.cap, ..OracleOptions::default() };
    if exact {
        let fast = graph_embed_exact(g, w, s.t, s.variant)?;
        let slow = oracle_embed_exact(g, w, s.t, s.variant, &opts)?;
        let abs = fast
            .iter()
            .flatten()
            .zip(slow.iter().flatten())
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0) as f64;
        return Ok(Residual { abs, rel: abs });
    }
    let slow = oracle_embed_with(g, w, s.t, s.variant, &opts)?;
    let fast = graph_embed_with(g, w, &EmbedOptions { t: s.t, variant: s.variant, ..Default::default() })?;
    let mut res = Residual { abs: 0.0, rel: 0.0 };
    for (a, b) in fast.concatenated().iter().zip(slow.concatenated().iter()) {
        let d = (a - b).abs();
        res.abs = res.abs.max(d);
        res.rel = res.rel.max(d / a.abs().max(b.abs()).max(1.0));
    }
    Ok(res)
}

pub fn run(args: OracleCheckArgs, ctx: &Ctx) -> CliResult {
    let mut s: Settings = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.schema {
        s.schema = v;
    }
    if let Some(v) = args.t {
        s.t = v;
    }
    if let Some(v) = args.variant {
        s.variant = v;
    }
    if let Some(v) = args.cap {
        s.cap = v;
    }
    if let Some(v) = args.r {
        s.r = v;
    }
    if let Some(v) = args.tolerance {
        s.tolerance = v;
    }

    let schema = load_schema(&s.schema)?;
    let graphs = load_graphs(&args.graphs, &schema)?;
    let w = match &args.embedding {
        Some(p) => load_embedding(p, &schema).with_path(p)?,
        None => random_embedding_scaled(
            &schema,
            s.r,
            EntryDistribution::Rademacher,
            derive_seed(ctx.seed, "oracle-check/embedding"),
            1.0,
        )?,
    };
    let exact = w.weights().iter().all(|x| x.fract() == 0.0 && x.abs() < 1e15);
    // Refuse up front so no partial work is reported for an over-cap corpus.
    if let Some((i, g)) = graphs.iter().enumerate().find(|(_, g)| g.num_vertices() > s.cap) {
        return Err(CliError::validation(anyhow!(
            "graph {i} has {} vertices, above the enumeration cap of {}; raise --cap to check it",
            g.num_vertices(),
            s.cap
        )));
    }

    let results: Vec<ngram_graph::Result<Residual>> = graphs.par_iter().map(|g| check_one(g, &w, &s, exact)).collect();
    let mut worst = Residual { abs: 0.0, rel: 0.0 };
    let mut bad = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let r = r.map_err(|e| CliError::from(e).context(format!("graph {i}")))?;
        let failed = if exact { r.abs > 0.0 } else { r.rel > s.tolerance };
        if failed {
            bad.push(i);
        }
        worst.abs = worst.abs.max(r.abs);
        worst.rel = worst.rel.max(r.rel);
    }
    let mode = if exact { "exact" } else { "float" };
    println!(
        "checked {} graphs, T={}, variant {:?}, {mode}: max residual {:e} (relative {:e})",
        graphs.len(),
        s.t,
        s.variant,
        worst.abs,
        worst.rel
    );
    if !bad.is_empty() {
        return Err(CliError::validation(anyhow!("recurrence and enumeration disagree on graphs {bad:?}")));
    }
    Ok(())
}
