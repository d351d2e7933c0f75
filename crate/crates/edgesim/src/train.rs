//! The training loop: one agent learning across episodes of the configured
//! training cell.
//!
//! Episode `e` runs the scenario with master seed `seed_base + e`, so every
//! episode sees a fresh workload and mobility trace while the agent (and its
//! exploration schedule) persists. Two checkpoints come out: the episode
//! with the lowest failed-task percentage (`checkpoint_best`) and the final
//! state (`checkpoint_last`), each with a metadata sidecar. `episodes.csv`
//! logs the per-episode learning curve.

use crate::config::ExperimentConfig;
use crate::tensor_io::{self, CheckpointMeta};
use anyhow::{bail, Context, Result};
use edgesim_core::nn::DenseNetwork;
use edgesim_core::scenario::{PolicyHandle, RunOptions};
use edgesim_core::{DdqnAgent, RngStream, Simulation};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// One line of the training log.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub failed_pct: f64,
    pub generated: u64,
    pub completed: u64,
    pub censored: u64,
    pub success: u64,
    pub transitions_forwarded: usize,
    pub transitions_dropped: usize,
    /// Exploration level the episode was played with.
    pub epsilon: f64,
    /// Cumulative optimizer steps after the episode.
    pub train_steps: u64,
    pub cumulative_reward: i64,
}

/// What a finished training run produced.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub episodes: Vec<EpisodeRecord>,
    pub best_episode: usize,
    pub best_failed_pct: f64,
    pub checkpoint_best: PathBuf,
    pub checkpoint_last: PathBuf,
    pub log_path: PathBuf,
}

/// Train the learning orchestrator per the config's training section,
/// writing checkpoints and the episode log into `out_dir`.
pub fn run_training(
    config: &ExperimentConfig,
    episodes_override: Option<usize>,
    out_dir: &Path,
) -> Result<TrainSummary> {
    let episodes = episodes_override.unwrap_or(config.training.episodes);
    if episodes == 0 {
        bail!("training needs at least one episode");
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let density = config.training.device_count;
    let seed_base = config.training.seed_base;
    let server_count = config.scenario.edge_server_count;
    let mut init_rng = RngStream::new(seed_base, "network-init");
    let mut agent = DdqnAgent::new(
        server_count,
        config.scenario_for(density, seed_base).normalizer(),
        config.agent.clone(),
        &mut init_rng,
    );

    let mut records: Vec<EpisodeRecord> = Vec::with_capacity(episodes);
    let mut best: Option<(usize, f64, f64, DenseNetwork)> = None; // episode, failed%, epsilon, net

    for episode in 0..episodes {
        let seed = seed_base + episode as u64;
        let scenario = config.scenario_for(density, seed);
        let epsilon = agent.epsilon();
        let out = Simulation::run(
            &scenario,
            PolicyHandle::Learn(&mut agent),
            RunOptions::default(),
        )
        .map_err(|e| anyhow::anyhow!("episode {episode}: {e}"))?;
        let overall = out.metrics.overall();
        let record = EpisodeRecord {
            episode,
            seed,
            failed_pct: overall.failed_pct(),
            generated: out.metrics.generated(),
            completed: overall.completed(),
            censored: out.metrics.censored,
            success: overall.success,
            transitions_forwarded: out.transitions_forwarded,
            transitions_dropped: out.transitions_dropped,
            epsilon,
            train_steps: agent.train_steps(),
            cumulative_reward: out.metrics.cumulative_reward(),
        };
        println!(
            "episode {episode:>3}: failed {:.2}%  epsilon {:.3}  reward {}",
            record.failed_pct, record.epsilon, record.cumulative_reward
        );
        if best.as_ref().is_none_or(|(_, b, _, _)| record.failed_pct < *b) {
            best = Some((
                episode,
                record.failed_pct,
                agent.epsilon(),
                agent.online_network().clone(),
            ));
        }
        records.push(record);
        agent.end_episode();
    }

    let log_path = out_dir.join("episodes.csv");
    let mut writer = csv::Writer::from_path(&log_path)
        .with_context(|| format!("creating {}", log_path.display()))?;
    for record in &records {
        writer.serialize(record)?;
    }
    writer.flush()?;

    let (best_episode, best_failed_pct, best_epsilon, best_net) =
        best.expect("at least one episode ran");
    let checkpoint_best = out_dir.join("checkpoint_best.tensor");
    tensor_io::write_network(&checkpoint_best, &best_net)?;
    tensor_io::write_meta(
        &checkpoint_best,
        &CheckpointMeta {
            format_version: 1,
            edge_server_count: server_count,
            episodes_completed: best_episode + 1,
            train_steps: records[best_episode].train_steps,
            epsilon: best_epsilon,
            failed_pct: best_failed_pct,
        },
    )?;

    let checkpoint_last = out_dir.join("checkpoint_last.tensor");
    tensor_io::write_network(&checkpoint_last, agent.online_network())?;
    tensor_io::write_meta(
        &checkpoint_last,
        &CheckpointMeta {
            format_version: 1,
            edge_server_count: server_count,
            episodes_completed: episodes,
            train_steps: agent.train_steps(),
            epsilon: agent.epsilon(),
            failed_pct: records.last().expect("nonempty").failed_pct,
        },
    )?;

    println!(
        "best episode {best_episode} at {best_failed_pct:.2}% failed; checkpoints in {}",
        out_dir.display()
    );
    Ok(TrainSummary {
        episodes: records,
        best_episode,
        best_failed_pct,
        checkpoint_best,
        checkpoint_last,
        log_path,
    })
}
