//! Command-line front end: `train`, `eval`, and `emit-plots` over one
//! experiment config file.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use edgesim::config::{known_orchestrators, ExperimentConfig};
use edgesim::{eval, report, train};
use edgesim_core::PolicyKind;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "edgesim",
    version,
    about = "Edge-computing task-offloading simulator and orchestrator benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the learning orchestrator and save checkpoints.
    Train {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Directory for checkpoints and the episode log.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep orchestrators x device counts x seeds and write the report.
    Eval {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Trained network for the deepedge orchestrator.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Restrict the sweep to one orchestrator.
        #[arg(long)]
        orchestrator: Option<String>,
        /// Directory for report.csv and the figure data files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the per-figure data files from an existing report.csv.
    EmitPlots {
        /// A report.csv produced by `eval`.
        #[arg(long)]
        report: PathBuf,
        /// Directory for the figure data files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            episodes,
            out,
        } => {
            let config = ExperimentConfig::load(&config)?;
            train::run_training(&config, episodes, &out)?;
        }
        Command::Eval {
            config,
            checkpoint,
            orchestrator,
            out,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let only = match orchestrator.as_deref() {
                None => None,
                Some(name) => match PolicyKind::from_name(name) {
                    Some(kind) => Some(kind),
                    None => bail!(
                        "unknown orchestrator {name:?}; expected one of {}",
                        known_orchestrators()
                    ),
                },
            };
            eval::run_evaluation(&config, checkpoint.as_deref(), only, &out)?;
        }
        Command::EmitPlots { report, out } => {
            let rows = report::read_report_csv(&report)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let files = report::emit_plot_data(&rows, &out)?;
            println!("wrote {} figure data files to {}", files.len(), out.display());
        }
    }
    Ok(())
}
