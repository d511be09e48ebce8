use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use serde::{Deserialize, Serialize};

use ngram_graph::predict::{kfold_cv, EvalReport};
use ngram_graph::rng::derive_seed;

use super::{set_r, Ctx, PipelineFlags, PipelineSettings};
use crate::error::{CliError, CliResult, Context};
use crate::support::{List, base_settings, create_parent, list, load_graphs, load_schema, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Labelled graphs
    #[arg(short, long)]
    graphs: PathBuf,
    /// Table of metric against T for each r (CSV)
    #[arg(short, long)]
    output: PathBuf,
    /// Embedding dimensions, comma separated
    #[arg(long = "r", value_parser = list::<usize>)]
    r: Option<List<usize>>,
    /// Walk lengths, comma separated
    #[arg(long = "T", visible_alias = "t", value_parser = list::<usize>)]
    t: Option<List<usize>>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    #[serde(flatten)]
    base: PipelineSettings,
    r_grid: Vec<usize>,
    t_grid: Vec<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { base: PipelineSettings::default(), r_grid: vec![50, 100], t_grid: vec![2, 4, 6] }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

pub fn run(args: SweepArgs, ctx: &Ctx) -> CliResult {
    let mut s: Settings = base_settings(ctx.config.as_ref())?;
    args.pipeline.apply(&mut s.base);
    if let Some(v) = args.r {
        s.r_grid = v;
    }
    if let Some(v) = args.t {
        s.t_grid = v;
    }
    if s.r_grid.is_empty() || s.t_grid.is_empty() {
        return Err(CliError::validation(anyhow!("the r and T grids need at least one value each")));
    }
    let schema = load_schema(&s.base.schema)?;
    let graphs = load_graphs(&args.graphs, &schema)?;
    // One seed for every cell, so folds and embeddings are shared across T.
    let seed = derive_seed(ctx.seed, "sweep/cv");

    let mut cells: Vec<(usize, usize, Vec<EvalReport>)> = Vec::new();
    for &r in &s.r_grid {
        for &t in &s.t_grid {
            let mut p = s.base.pipeline.clone();
            set_r(&mut p, r);
            p.embed.t = t;
            let report = kfold_cv(&graphs, &schema, &p, seed)
                .map_err(|e| CliError::from(e).context(format!("cell r={r} T={t}")))?;
            let primary = &report.reports[0];
            eprintln!("r={r:<5} T={t:<3} {primary}");
            cells.push((r, t, report.reports));
        }
    }

    let folds = s.base.pipeline.cv.folds;
    create_parent(&args.output)?;
    let mut out = BufWriter::new(fs::File::create(&args.output).with_path(&args.output)?);
    let fold_cols: String = (1..=folds).map(|f| format!(",fold_{f}")).collect();
    writeln!(out, "r,T,metric{fold_cols},mean,std").with_path(&args.output)?;
    for (r, t, reports) in &cells {
        let primary = &reports[0];
        let values: String = primary.folds.iter().map(|v| format!(",{}", fmt(*v))).collect();
        writeln!(out, "{r},{t},{}{values},{},{}", primary.metric.name(), fmt(primary.mean), fmt(primary.std))
            .with_path(&args.output)?;
    }
    out.flush().with_path(&args.output)?;
    let all: Vec<_> = cells.iter().map(|(r, t, reports)| serde_json::json!({ "r": r, "T": t, "reports": reports })).collect();
    let run = RunConfig::new("sweep", ctx.seed, &[&args.graphs], Some(&args.output), &s);
    write_manifest(&args.output, &run, &[&args.graphs], serde_json::json!({ "cells": all }))?;
    Ok(())
}
