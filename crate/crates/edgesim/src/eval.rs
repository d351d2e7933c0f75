//! The evaluation sweep: orchestrators x device counts x seeds, each cell an
//! independent simulation run.
//!
//! Cells are embarrassingly parallel, so they run on a rayon pool. The pool
//! size honours the `EDGESIM_WORKERS` environment variable when set;
//! otherwise rayon picks the hardware default. Every cell owns its state
//! (including a private copy of the learned network), so the emitted report
//! is byte-identical regardless of worker count or scheduling order.

use crate::config::ExperimentConfig;
use crate::report::{self, ReportRow};
use crate::tensor_io;
use anyhow::{bail, Context, Result};
use edgesim_core::nn::DenseNetwork;
use edgesim_core::scenario::{PolicyHandle, RunOptions};
use edgesim_core::{DdqnAgent, PolicyKind, Simulation};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Environment variable that pins the evaluation worker count.
pub const WORKERS_ENV: &str = "EDGESIM_WORKERS";

/// What a finished evaluation run produced.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub rows: Vec<ReportRow>,
    pub report_path: PathBuf,
    pub plot_files: Vec<PathBuf>,
}

/// Run the configured sweep and write `report.csv` plus the per-figure data
/// files into `out_dir`.
///
/// `checkpoint` is required when the sweep includes the learning
/// orchestrator; its network runs greedily (no exploration, no updates).
/// `only` restricts the sweep to a single orchestrator.
pub fn run_evaluation(
    config: &ExperimentConfig,
    checkpoint: Option<&Path>,
    only: Option<PolicyKind>,
    out_dir: &Path,
) -> Result<EvalSummary> {
    let orchestrators: Vec<PolicyKind> = match only {
        Some(kind) => vec![kind],
        None => config.evaluation_orchestrators(),
    };
    if orchestrators.is_empty() {
        bail!("no orchestrators selected for evaluation");
    }

    let network = if orchestrators.contains(&PolicyKind::DeepEdge) {
        let Some(path) = checkpoint else {
            bail!("missing checkpoint: the deepedge orchestrator needs --checkpoint");
        };
        let net = tensor_io::read_network(path)?;
        let expected = config.scenario.edge_server_count + 9;
        if net.input_dim() != expected {
            bail!(
                "checkpoint expects {} state features but this config produces {expected} \
                 ({} edge servers)",
                net.input_dim(),
                config.scenario.edge_server_count
            );
        }
        Some(net)
    } else {
        None
    };

    let mut cells: Vec<(PolicyKind, usize, u64)> = Vec::new();
    for &kind in &orchestrators {
        for &density in &config.evaluation.device_counts {
            for &seed in &config.evaluation.seeds {
                cells.push((kind, density, seed));
            }
        }
    }

    let run_cell = |&(kind, density, seed): &(PolicyKind, usize, u64)| -> Result<ReportRow> {
        let scenario = config.scenario_for(density, seed);
        let metrics = match (kind, &network) {
            (PolicyKind::DeepEdge, Some(net)) => {
                let mut agent = new_greedy_agent(config, net, density, seed)?;
                Simulation::run(
                    &scenario,
                    PolicyHandle::Greedy(&mut agent),
                    RunOptions::default(),
                )
                .map(|out| out.metrics)
            }
            (PolicyKind::DeepEdge, None) => unreachable!("checkpoint checked above"),
            (rule, _) => Simulation::run_baseline(&scenario, rule),
        }
        .map_err(|e| {
            anyhow::anyhow!("{} at {density} devices, seed {seed}: {e}", kind.name())
        })?;
        Ok(ReportRow::from_metrics(kind, density, seed, &metrics))
    };

    let mut rows: Vec<ReportRow> = match pinned_workers()? {
        Some(1) => cells.iter().map(run_cell).collect::<Result<_>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the evaluation worker pool")?
            .install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?,
        None => cells.par_iter().map(run_cell).collect::<Result<_>>()?,
    };
    report::sort_rows(&mut rows);

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let report_path = out_dir.join("report.csv");
    report::write_report_csv(&report_path, &rows)?;
    let plot_files = report::emit_plot_data(&rows, out_dir)?;
    println!(
        "evaluated {} cells -> {}",
        rows.len(),
        report_path.display()
    );
    Ok(EvalSummary {
        rows,
        report_path,
        plot_files,
    })
}

fn new_greedy_agent(
    config: &ExperimentConfig,
    net: &DenseNetwork,
    density: usize,
    seed: u64,
) -> Result<DdqnAgent> {
    let normalizer = config.scenario_for(density, seed).normalizer();
    let mut agent = DdqnAgent::from_network(net.clone(), normalizer, config.agent.clone())
        .map_err(|e| anyhow::anyhow!("checkpoint does not fit this scenario: {e}"))?;
    agent.set_epsilon(0.0);
    Ok(agent)
}

fn pinned_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))?;
            if n == 0 {
                bail!("{WORKERS_ENV} must be a positive integer, got 0");
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(format!("reading {WORKERS_ENV}")),
    }
}
