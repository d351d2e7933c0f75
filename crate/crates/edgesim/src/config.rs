//! The experiment configuration document.
//!
//! One TOML file describes everything a run needs: topology and horizon,
//! workload profiles, link tables, compute tiers, baseline thresholds, agent
//! hyperparameters, the evaluation sweep (densities, seeds, orchestrators),
//! and the training cell. Every model constant is data here, so alternative
//! scenarios need no code changes.

use anyhow::{bail, Context, Result};
use edgesim_core::orchestrator::BaselineConfig;
use edgesim_core::scenario::default_attractiveness;
use edgesim_core::{AgentConfig, PolicyKind, ScenarioConfig};
use edgesim_core::compute::ComputeConfig;
use edgesim_core::network::NetworkConfig;
use edgesim_core::workload::WorkloadConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Topology, horizon, and mobility environment shared by every cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub edge_server_count: usize,
    pub duration_s: f64,
    /// One weight per location; omitted means the built-in 1/2/3 cycle.
    pub attractiveness: Option<Vec<f64>>,
    pub base_dwell_s: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            edge_server_count: 14,
            duration_s: 300.0,
            attractiveness: None,
            base_dwell_s: 60.0,
        }
    }
}

/// The evaluation sweep: which orchestrators to run over which loads, and
/// the seeds pairing their workload traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub device_counts: Vec<usize>,
    /// Master seeds; every orchestrator runs each (density, seed) cell on an
    /// identical workload/mobility trace.
    pub seeds: Vec<u64>,
    pub orchestrators: Vec<String>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            device_counts: (1..=12).map(|i| i * 200).collect(),
            seeds: (1..=40).collect(),
            orchestrators: PolicyKind::ALL.iter().map(|k| k.name().to_string()).collect(),
        }
    }
}

/// The training cell: one density trained for a number of episodes, each
/// episode on a fresh derived seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub episodes: usize,
    pub device_count: usize,
    /// Episode `e` simulates with master seed `seed_base + e`; the agent's
    /// exploration and weight-init streams also derive from this base.
    pub seed_base: u64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            episodes: 101,
            device_count: 2400,
            seed_base: 9_000,
        }
    }
}

/// The whole experiment document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    pub workload: WorkloadConfig,
    pub network: NetworkConfig,
    pub compute: ComputeConfig,
    pub baselines: BaselineConfig,
    pub agent: AgentConfig,
    pub evaluation: EvaluationSection,
    pub training: TrainingSection,
}

impl ExperimentConfig {
    /// Parse and validate a TOML experiment file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.evaluation.device_counts.is_empty() {
            bail!("evaluation.device_counts must not be empty");
        }
        if self.evaluation.seeds.is_empty() {
            bail!("evaluation.seeds must not be empty");
        }
        if self.evaluation.orchestrators.is_empty() {
            bail!("evaluation.orchestrators must not be empty");
        }
        for name in &self.evaluation.orchestrators {
            if PolicyKind::from_name(name).is_none() {
                bail!(
                    "unknown orchestrator {name:?}; expected one of {}",
                    known_orchestrators()
                );
            }
        }
        if self.training.device_count == 0 {
            bail!("training.device_count must be positive");
        }
        // Exercise the core validation once per distinct density, with a
        // placeholder seed: seeds do not affect validity.
        for &device_count in self
            .evaluation
            .device_counts
            .iter()
            .chain(std::iter::once(&self.training.device_count))
        {
            self.scenario_for(device_count, 0)
                .validate()
                .map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        Ok(())
    }

    /// The orchestrators selected for evaluation, in canonical order.
    pub fn evaluation_orchestrators(&self) -> Vec<PolicyKind> {
        let requested: Vec<PolicyKind> = self
            .evaluation
            .orchestrators
            .iter()
            .filter_map(|n| PolicyKind::from_name(n))
            .collect();
        PolicyKind::ALL
            .iter()
            .copied()
            .filter(|k| requested.contains(k))
            .collect()
    }

    /// Materialize one runnable cell.
    pub fn scenario_for(&self, device_count: usize, master_seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            edge_server_count: self.scenario.edge_server_count,
            device_count,
            duration_s: self.scenario.duration_s,
            master_seed,
            workload: self.workload.clone(),
            attractiveness: self
                .scenario
                .attractiveness
                .clone()
                .unwrap_or_else(|| default_attractiveness(self.scenario.edge_server_count)),
            base_dwell_s: self.scenario.base_dwell_s,
            network: self.network.clone(),
            compute: self.compute.clone(),
            baselines: self.baselines.clone(),
        }
    }
}

pub fn known_orchestrators() -> String {
    PolicyKind::ALL
        .iter()
        .map(|k| k.name())
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_document_is_valid_and_round_trips() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let text = toml::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.scenario.edge_server_count, 14);
        assert_eq!(back.evaluation.device_counts.len(), 12);
        assert_eq!(back.evaluation.seeds.len(), 40);
    }

    #[test]
    fn empty_overrides_fall_back_to_defaults() {
        let config: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(config.scenario.duration_s, 300.0);
        assert_eq!(config.training.device_count, 2400);
        assert_eq!(config.agent.minibatch_size, 4);
    }

    #[test]
    fn unknown_orchestrators_are_rejected() {
        let mut config = ExperimentConfig::default();
        config.evaluation.orchestrators = vec!["fuzzy".into()];
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("fuzzy"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("[scenario]\nedge_servers = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("edge_servers"), "{err}");
    }

    #[test]
    fn orchestrator_selection_is_canonically_ordered() {
        let mut config = ExperimentConfig::default();
        config.evaluation.orchestrators = vec!["deepedge".into(), "network".into()];
        let kinds = config.evaluation_orchestrators();
        assert_eq!(kinds, vec![PolicyKind::NetworkBased, PolicyKind::DeepEdge]);
    }

    #[test]
    fn scenario_materialization_carries_overrides() {
        let mut config = ExperimentConfig::default();
        config.scenario.edge_server_count = 3;
        config.scenario.attractiveness = Some(vec![5.0, 1.0, 1.0]);
        let cell = config.scenario_for(60, 17);
        assert_eq!(cell.edge_server_count, 3);
        assert_eq!(cell.device_count, 60);
        assert_eq!(cell.master_seed, 17);
        assert_eq!(cell.attractiveness, vec![5.0, 1.0, 1.0]);
        cell.validate().unwrap();
    }
}
