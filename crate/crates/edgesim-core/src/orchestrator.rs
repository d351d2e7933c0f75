//! Decision state, placement actions and the rule-based orchestrators.
//!
//! Every task triggers exactly one placement decision when it reaches the
//! orchestrator. The decision input is a [`StateVector`] with `9 + N`
//! features for `N` edge servers:
//!
//! | index    | feature                                              |
//! |----------|------------------------------------------------------|
//! | 0        | remaining WAN bandwidth at the task's location, Mbps |
//! | 1        | current MAN delay estimate, seconds (clamped)        |
//! | 2        | VM share the task needs on an edge VM, percent       |
//! | 3        | task's home WLAN id                                  |
//! | 4        | task's delay sensitivity                             |
//! | 5        | tasks offloaded to the home WLAN so far (cumulative) |
//! | 6        | tasks offloaded across the MAN so far (cumulative)   |
//! | 7        | tasks offloaded to the WAN/cloud so far (cumulative) |
//! | 8        | tasks currently in flight across the MAN             |
//! | 9 + j    | mean committed load of edge server j, percent        |
//!
//! Exactly one of the cumulative counters [5..7] increments per decision, so
//! two consecutive decision states can never be identical — the sequence of
//! states is Markov-distinguishable even when nothing else changed.
//!
//! The module ships four rule-based policies; the learning policy lives in
//! [`crate::agent`].

use crate::compute::{ComputeModel, ComputeTarget};
use crate::network::NetworkModel;
use crate::rng::RngStream;
use crate::workload::Task;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Number of features before the per-server load block.
pub const FIXED_FEATURES: usize = 9;

/// A placement decision: edge server `0..N` or the cloud (`N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action(pub usize);

impl Action {
    /// The cloud action for a topology with `n_servers` edge servers.
    pub fn cloud(n_servers: usize) -> Action {
        Action(n_servers)
    }

    pub fn is_cloud(self, n_servers: usize) -> bool {
        self.0 == n_servers
    }

    /// Edge server index, if this is an edge placement.
    pub fn edge_index(self, n_servers: usize) -> Option<usize> {
        (self.0 < n_servers).then_some(self.0)
    }

    /// The compute target this action denotes.
    pub fn target(self, n_servers: usize) -> ComputeTarget {
        match self.edge_index(n_servers) {
            Some(j) => ComputeTarget::Edge(j),
            None => ComputeTarget::Cloud,
        }
    }
}

/// Which tier of the network an offload decision sends the task across.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffloadKind {
    /// Home edge server: the task only crosses its WLAN.
    Wlan,
    /// Another location's edge server: WLAN plus MAN.
    Man,
    /// Cloud: WLAN plus WAN.
    Wan,
}

/// Classify an action relative to the task's home location.
pub fn classify_offload(action: Action, home_wlan: usize, n_servers: usize) -> OffloadKind {
    match action.edge_index(n_servers) {
        None => OffloadKind::Wan,
        Some(j) if j == home_wlan => OffloadKind::Wlan,
        Some(_) => OffloadKind::Man,
    }
}

/// Environment-level offload accounting feeding state features [5..8].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OffloadCounters {
    /// Cumulative tasks sent to their home edge server.
    pub to_wlan: u64,
    /// Cumulative tasks sent across the MAN to another edge server.
    pub to_man: u64,
    /// Cumulative tasks sent to the cloud.
    pub to_wan: u64,
    /// Tasks currently crossing the MAN toward their edge server.
    pub active_man: u64,
}

impl OffloadCounters {
    /// Record a dispatch. Exactly one cumulative counter increments.
    pub fn record_dispatch(&mut self, kind: OffloadKind) {
        match kind {
            OffloadKind::Wlan => self.to_wlan += 1,
            OffloadKind::Man => {
                self.to_man += 1;
                self.active_man += 1;
            }
            OffloadKind::Wan => self.to_wan += 1,
        }
    }

    /// A MAN-bound task reached its destination server.
    pub fn man_arrived(&mut self) {
        debug_assert!(self.active_man > 0, "active MAN count underflow");
        self.active_man = self.active_man.saturating_sub(1);
    }
}

/// The `9 + N` feature vector a decision is based on.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    features: Vec<f64>,
}

impl StateVector {
    /// Wrap a raw feature vector (must hold at least the fixed block).
    pub fn from_features(features: Vec<f64>) -> StateVector {
        debug_assert!(features.len() >= FIXED_FEATURES);
        StateVector { features }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Number of edge servers this state describes.
    pub fn server_count(&self) -> usize {
        self.features.len() - FIXED_FEATURES
    }

    pub fn wan_bandwidth_mbps(&self) -> f64 {
        self.features[0]
    }

    pub fn man_delay_s(&self) -> f64 {
        self.features[1]
    }

    pub fn required_capacity_pct(&self) -> f64 {
        self.features[2]
    }

    pub fn wlan_id(&self) -> f64 {
        self.features[3]
    }

    pub fn delay_sensitivity(&self) -> f64 {
        self.features[4]
    }

    pub fn tasks_to_wlan(&self) -> f64 {
        self.features[5]
    }

    pub fn tasks_to_man(&self) -> f64 {
        self.features[6]
    }

    pub fn tasks_to_wan(&self) -> f64 {
        self.features[7]
    }

    pub fn active_man_tasks(&self) -> f64 {
        self.features[8]
    }

    /// Mean committed load of edge server `j`, percent.
    pub fn edge_load_pct(&self, j: usize) -> f64 {
        self.features[FIXED_FEATURES + j]
    }

    /// Mean of the per-server load features, percent.
    pub fn mean_edge_load_pct(&self) -> f64 {
        let n = self.server_count();
        if n == 0 {
            return 0.0;
        }
        self.features[FIXED_FEATURES..].iter().sum::<f64>() / n as f64
    }
}

/// Snapshot the decision state for `task` from the live environment.
///
/// Taken *before* the dispatch counters are updated for this task, so the
/// counters describe everything that happened strictly earlier.
pub fn build_state(
    task: &Task,
    counters: &OffloadCounters,
    network: &mut NetworkModel,
    compute: &ComputeModel,
    now: f64,
) -> StateVector {
    let n = compute.edge_server_count();
    let mut features = Vec::with_capacity(FIXED_FEATURES + n);
    features.push(network.remaining_wan_bandwidth(task.home_wlan_id));
    features.push(network.man_delay_for_state(now));
    features.push(task.required_capacity_pct);
    features.push(task.home_wlan_id as f64);
    features.push(task.delay_sensitivity);
    features.push(counters.to_wlan as f64);
    features.push(counters.to_man as f64);
    features.push(counters.to_wan as f64);
    features.push(counters.active_man as f64);
    for j in 0..n {
        features.push(compute.edge_server_mean_load(j));
    }
    StateVector { features }
}

/// Decision thresholds shared by the rule-based policies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BaselineConfig {
    /// Cloud is considered reachable while more WAN bandwidth than this
    /// remains, Mbps.
    pub wan_threshold_mbps: f64,
    /// Edge tier is considered busy at or above this mean load, percent.
    pub edge_load_threshold_pct: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            wan_threshold_mbps: 6.0,
            edge_load_threshold_pct: 80.0,
        }
    }
}

/// The available orchestrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PolicyKind {
    /// WAN-bandwidth rule: cloud while the WAN is healthy, else edge.
    NetworkBased,
    /// Edge-load rule: edge while the tier is below the load threshold.
    UtilizationBased,
    /// Cloud only when the WAN is healthy *and* the edge tier is busy.
    Hybrid,
    /// Uniformly random placement.
    Random,
    /// The trained double-deep-Q-network policy.
    DeepEdge,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::NetworkBased,
        PolicyKind::UtilizationBased,
        PolicyKind::Hybrid,
        PolicyKind::Random,
        PolicyKind::DeepEdge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NetworkBased => "network",
            PolicyKind::UtilizationBased => "utilization",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::Random => "random",
            PolicyKind::DeepEdge => "deepedge",
        }
    }

    pub fn from_name(name: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.iter().copied().find(|p| p.name() == name)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Least-loaded edge server that can still admit the task's share, judged
/// from the mean-load features (a server whose mean load is at most
/// `100 - share` surely has a VM with room). Falls back to the least-loaded
/// server overall when none qualifies; ties break to the lowest index.
fn least_loaded_edge(state: &StateVector, required_pct: f64) -> Action {
    let n = state.server_count();
    debug_assert!(n > 0, "no edge servers to choose from");
    let mut best: Option<(usize, f64)> = None;
    let mut best_any: (usize, f64) = (0, f64::INFINITY);
    for j in 0..n {
        let load = state.edge_load_pct(j);
        if load < best_any.1 {
            best_any = (j, load);
        }
        if load <= 100.0 - required_pct {
            match best {
                Some((_, b)) if b <= load => {}
                _ => best = Some((j, load)),
            }
        }
    }
    Action(best.map(|(j, _)| j).unwrap_or(best_any.0))
}

/// Cloud while the task's location still has WAN bandwidth above the
/// threshold (strictly), otherwise the least-loaded edge server.
pub fn decide_network_based(state: &StateVector, cfg: &BaselineConfig) -> Action {
    if state.wan_bandwidth_mbps() > cfg.wan_threshold_mbps {
        Action::cloud(state.server_count())
    } else {
        least_loaded_edge(state, state.required_capacity_pct())
    }
}

/// Least-loaded edge server while the edge tier's mean load is strictly
/// below the threshold, otherwise the cloud.
pub fn decide_utilization_based(state: &StateVector, cfg: &BaselineConfig) -> Action {
    if state.mean_edge_load_pct() < cfg.edge_load_threshold_pct {
        least_loaded_edge(state, state.required_capacity_pct())
    } else {
        Action::cloud(state.server_count())
    }
}

/// Cloud only when the WAN is healthy *and* the edge tier is at or above
/// its load threshold; otherwise the least-loaded edge server.
pub fn decide_hybrid(state: &StateVector, cfg: &BaselineConfig) -> Action {
    let wan_ok = state.wan_bandwidth_mbps() > cfg.wan_threshold_mbps;
    let edge_busy = state.mean_edge_load_pct() >= cfg.edge_load_threshold_pct;
    if wan_ok && edge_busy {
        Action::cloud(state.server_count())
    } else {
        least_loaded_edge(state, state.required_capacity_pct())
    }
}

/// Uniformly random placement over the `N + 1` targets.
pub fn decide_random(state: &StateVector, rng: &mut RngStream) -> Action {
    Action(rng.index(state.server_count() + 1))
}
