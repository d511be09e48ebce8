//! `ngg`: featurize molecules, train vertex embeddings, build n-gram graph
//! features, check them against enumeration, and fit linear models.

mod commands;
mod error;
mod support;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "ngg", version, about = "N-gram graph embeddings for attributed graphs")]
struct Cli {
    /// JSON settings for the subcommand; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; every random stage derives its own stream from it
    #[arg(long, global = true, env = "NGG_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn SDF or JSON input into validated graph documents
    Featurize(commands::featurize::FeaturizeArgs),
    /// Train a vertex embedding by neighborhood prediction
    TrainVertex(commands::train_vertex::TrainVertexArgs),
    /// Compute n-gram graph features for a corpus
    Embed(commands::embed::EmbedArgs),
    /// Compare the walk recurrence against brute-force enumeration
    OracleCheck(commands::oracle_check::OracleCheckArgs),
    /// Sparse recovery success rates over a parameter grid
    Recover(commands::recover::RecoverArgs),
    /// Fit a regularized linear model on exported features
    Fit(commands::fit::FitArgs),
    /// Score a saved model, or cross-validate the full pipeline
    Eval(commands::eval::EvalArgs),
    /// Cross-validate over a grid of embedding dimensions and walk lengths
    Sweep(commands::sweep::SweepArgs),
}

fn run(cli: Cli) -> CliResult {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::validation(anyhow::anyhow!("--jobs: {e}")))?;
    }
    let config = cli.config.as_deref().map(support::read_config).transpose()?;
    let config_seed = config.as_ref().and_then(|c| c.get("seed")).and_then(serde_json::Value::as_u64);
    let ctx = Ctx { seed: cli.seed.or(config_seed).unwrap_or(0), config };
    match cli.command {
        Command::Featurize(a) => commands::featurize::run(a, &ctx),
        Command::TrainVertex(a) => commands::train_vertex::run(a, &ctx),
        Command::Embed(a) => commands::embed::run(a, &ctx),
        Command::OracleCheck(a) => commands::oracle_check::run(a, &ctx),
        Command::Recover(a) => commands::recover::run(a, &ctx),
        Command::Fit(a) => commands::fit::run(a, &ctx),
        Command::Eval(a) => commands::eval::run(a, &ctx),
        Command::Sweep(a) => commands::sweep::run(a, &ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code as u8)
        }
    }
}
