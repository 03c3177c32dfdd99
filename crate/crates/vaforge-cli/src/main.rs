//! `vaforge` — pipeline runner for verbal-autopsy cause-of-death
//! classification: validation, preparation, training runs with several
//! fusion strategies, ensembling, hyperparameter search, sensitivity and
//! ablation harnesses, sufficiency analysis, and report rendering.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 validation failure.

mod commands;
mod config;
mod error;
mod io;
mod pipeline;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{resolve_config_path, RunConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "vaforge",
    version,
    about = "Verbal-autopsy cause-of-death classification pipeline",
    after_help = "The config file is JSON; see the project README for the schema.\n\
                  When --config is absent, the VAFORGE_CONFIG environment variable is used."
)]
struct Cli {
    /// Path to the JSON run configuration (or a run manifest).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override every seed in the config with one value.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Override the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check config, data files, taxonomy coverage, and narrative validity.
    Validate,
    /// Preprocess narratives and render question sentences.
    Prep,
    /// Run the configured pipeline and write metrics + manifest.
    Run,
    /// Soft-vote saved prediction files and score the ensemble.
    Ensemble,
    /// Tune one learner with TPE sampling and median pruning.
    Hpo,
    /// Training-size sensitivity curve on a fixed hold-out.
    Sensitivity,
    /// Leave-one-model-out voting ablation.
    Ablation,
    /// Predict information sufficiency and split the fusion gain.
    Sufficiency,
    /// Render collected artifacts as a markdown report.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()?;
    }
    let path = resolve_config_path(cli.config)?;
    let mut config = RunConfig::load(&path)?;
    config.apply_overrides(cli.seed, cli.out);
    match cli.command {
        Command::Validate => commands::validate::cmd_validate(&config),
        Command::Prep => commands::prep::cmd_prep(&config),
        Command::Run => commands::run::cmd_run(&config),
        Command::Ensemble => commands::ensemble::cmd_ensemble(&config),
        Command::Hpo => commands::hpo::cmd_hpo(&config),
        Command::Sensitivity => commands::sensitivity::cmd_sensitivity(&config),
        Command::Ablation => commands::ablation::cmd_ablation(&config),
        Command::Sufficiency => commands::sufficiency::cmd_sufficiency(&config),
        Command::Report => commands::report::cmd_report(&config),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(error::exit_code_for(&err));
    }
}
