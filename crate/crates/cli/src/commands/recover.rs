use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;

use ngram_graph::rng::derive_seed;
use ngram_graph::theory::{recovery_experiment, write_recovery_csv, RecoveryConfig, RecoveryMethod};

use super::Ctx;
use crate::error::{CliResult, Context};
use crate::support::{List, base_settings, create_parent, kebab, list, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct RecoverArgs {
    /// Success table (CSV)
    #[arg(short, long)]
    output: PathBuf,
    /// Row counts, comma separated
    #[arg(long, value_parser = list::<usize>)]
    r: Option<List<usize>>,
    /// Attribute cardinalities
    #[arg(long, value_parser = list::<usize>)]
    k: Option<List<usize>>,
    /// Walk lengths
    #[arg(long, value_parser = list::<usize>)]
    n: Option<List<usize>>,
    /// Sparsity levels
    #[arg(long, value_parser = list::<usize>)]
    s: Option<List<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// omp or ista
    #[arg(long, value_parser = kebab::<RecoveryMethod>)]
    method: Option<RecoveryMethod>,
    /// Entry scale of the sensing blocks (default r^-1/2)
    #[arg(long)]
    scale: Option<f64>,
}

pub fn run(args: RecoverArgs, ctx: &Ctx) -> CliResult {
    let mut cfg: RecoveryConfig = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.r {
        cfg.r = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.s {
        cfg.s = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.method {
        cfg.method = v;
    }
    if args.scale.is_some() {
        cfg.scale = args.scale;
    }
    cfg.seed = derive_seed(ctx.seed, "recover/experiment");

    let rows = recovery_experiment(&cfg)?;
    for row in &rows {
        println!(
            "r={:<5} k={:<4} n={} s={:<3} success {}/{} ({:.3})",
            row.r,
            row.k,
            row.n,
            row.s,
            row.successes,
            row.trials,
            row.rate()
        );
    }
    create_parent(&args.output)?;
    let out = BufWriter::new(fs::File::create(&args.output).with_path(&args.output)?);
    write_recovery_csv(out, &rows).with_path(&args.output)?;
    let run = RunConfig::new("recover", ctx.seed, &[], Some(&args.output), &cfg);
    write_manifest(&args.output, &run, &[], serde_json::json!({ "rows": rows }))?;
    Ok(())
}
