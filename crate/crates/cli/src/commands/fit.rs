use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use ngram_graph::predict::{fit, FitConfig, LinearModel, Penalty, Task};

use super::{load_features, select_rows, Ctx};
use crate::error::{CliResult, Context};
use crate::support::{base_settings, create_parent, hash_file, kebab, write_manifest, RunConfig};

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Feature file from embed (.bin, or .csv with its manifest)
    #[arg(short, long)]
    features: PathBuf,
    /// Manifest for a CSV feature file (default: next to it)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model JSON
    #[arg(short, long)]
    output: PathBuf,
    /// Training-set predictions, one per line
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// binary-logistic or least-squares
    #[arg(long, value_parser = kebab::<Task>)]
    task: Option<Task>,
    #[arg(long)]
    lambda: Option<f64>,
    /// squared-l2 or unsquared-l2
    #[arg(long, value_parser = kebab::<Penalty>)]
    penalty: Option<Penalty>,
    #[arg(long)]
    no_intercept: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

pub fn run(args: FitArgs, ctx: &Ctx) -> CliResult {
    let mut cfg: FitConfig = base_settings(ctx.config.as_ref())?;
    if let Some(v) = args.task {
        cfg.task = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.penalty {
        cfg.penalty = v;
    }
    if args.no_intercept {
        cfg.fit_intercept = false;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.tolerance {
        cfg.tolerance = v;
    }

    let fm = load_features(&args.features, args.manifest.as_deref())?;
    let rows = select_rows(&fm, true)?;
    let y = rows.y.expect("labels checked");
    let mut model: LinearModel = fit(rows.x.view(), &y, &cfg)?;
    model.manifest_hash = Some(hash_file(&args.features)?);
    let report = &model.report;
    eprintln!(
        "fit {} samples in {} iterations, objective {:.6e}, stationarity {:.2e}{}",
        report.samples,
        report.iterations,
        report.objective,
        report.gradient_norm,
        if report.converged { "" } else { " (not converged)" }
    );

    create_parent(&args.output)?;
    fs::write(&args.output, model.to_json()? + "\n").with_path(&args.output)?;
    let mut inputs = vec![args.features.as_path()];
    if let Some(m) = &args.manifest {
        inputs.push(m.as_path());
    }
    if let Some(p) = &args.predictions {
        create_parent(p)?;
        let mut out = fs::File::create(p).with_path(p)?;
        for v in model.predict(rows.x.view())? {
            writeln!(out, "{v:?}").with_path(p)?;
        }
    }
    let run = RunConfig::new("fit", ctx.seed, &inputs, Some(&args.output), &cfg);
    write_manifest(&args.output, &run, &inputs, serde_json::json!({ "rows": rows.index }))?;
    Ok(())
}
