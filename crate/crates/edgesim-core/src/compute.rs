//! VM admission, processing times and utilization accounting.
//!
//! Each edge location hosts one server with a fixed set of identical VMs;
//! the cloud is a single pool of faster VMs. A task occupies a VM-specific
//! share (percent) for the whole time it is being processed:
//!
//! * **Admission** is first-fit over VM indices — the task goes to the
//!   lowest-indexed VM whose committed share plus the task's share stays
//!   within 100%. If no VM fits, the task is rejected (a capacity failure);
//!   nothing queues.
//! * **Processing** runs on the task's dedicated share, so the time is
//!   `length / (vm_gips * share/100)` — independent of what else shares the
//!   VM, which keeps runs reproducible under any interleaving.
//!
//! The model also integrates committed utilization over time, yielding the
//! average VM utilization metrics for a run.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Placement tier of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Edge,
    Cloud,
}

/// Where a task may be processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputeTarget {
    /// Edge server at the given location index.
    Edge(usize),
    Cloud,
}

/// A VM slot granted by [`ComputeModel::admit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmSlot {
    pub tier: Tier,
    /// Edge location index; 0 for the cloud pool.
    pub server: usize,
    pub vm: usize,
}

/// Sizing of the compute tiers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ComputeConfig {
    pub vms_per_edge_server: usize,
    /// Capacity of one edge VM, giga-instructions per second.
    pub edge_vm_gips: f64,
    pub cloud_vm_count: usize,
    /// Capacity of one cloud VM, giga-instructions per second.
    pub cloud_vm_gips: f64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        ComputeConfig {
            vms_per_edge_server: 8,
            edge_vm_gips: 10.0,
            cloud_vm_count: 4,
            cloud_vm_gips: 100.0,
        }
    }
}

/// Dedicated-share processing time: `length / (capacity * share/100)`.
pub fn processing_time_s(length_gi: f64, vm_gips: f64, share_pct: f64) -> f64 {
    debug_assert!(vm_gips > 0.0 && share_pct > 0.0);
    length_gi / (vm_gips * share_pct / 100.0)
}

/// Committed utilization tolerance: shares like 0.6% are not exactly
/// representable in binary, so admission compares against 100% plus dust.
const UTIL_EPS: f64 = 1e-9;

/// Mutable compute state for one run.
#[derive(Debug, Clone)]
pub struct ComputeModel {
    config: ComputeConfig,
    /// Committed share per edge VM, `[server][vm]`, percent.
    edge_vms: Vec<Vec<f64>>,
    cloud_vms: Vec<f64>,
    /// `sum of committed shares x time`, percent-seconds, per tier.
    edge_util_integral: f64,
    cloud_util_integral: f64,
    edge_total_pct: f64,
    cloud_total_pct: f64,
    last_update: f64,
}

impl ComputeModel {
    pub fn new(edge_server_count: usize, config: ComputeConfig) -> Self {
        let edge_vms = alloc::vec![alloc::vec![0.0; config.vms_per_edge_server]; edge_server_count];
        let cloud_vms = alloc::vec![0.0; config.cloud_vm_count];
        ComputeModel {
            config,
            edge_vms,
            cloud_vms,
            edge_util_integral: 0.0,
            cloud_util_integral: 0.0,
            edge_total_pct: 0.0,
            cloud_total_pct: 0.0,
            last_update: 0.0,
        }
    }

    pub fn config(&self) -> &ComputeConfig {
        &self.config
    }

    pub fn edge_server_count(&self) -> usize {
        self.edge_vms.len()
    }

    fn integrate_to(&mut self, now: f64) {
        debug_assert!(now + UTIL_EPS >= self.last_update, "time went backwards");
        let dt = (now - self.last_update).max(0.0);
        self.edge_util_integral += self.edge_total_pct * dt;
        self.cloud_util_integral += self.cloud_total_pct * dt;
        self.last_update = now;
    }

    /// Share a task needs on the given target's VMs, percent.
    pub fn required_share_pct(target: ComputeTarget, edge_pct: f64, cloud_pct: f64) -> f64 {
        match target {
            ComputeTarget::Edge(_) => edge_pct,
            ComputeTarget::Cloud => cloud_pct,
        }
    }

    /// Processing time of a task of `length_gi` on the target tier with the
    /// given per-tier share.
    pub fn processing_time_for(&self, target: ComputeTarget, length_gi: f64, share_pct: f64) -> f64 {
        let gips = match target {
            ComputeTarget::Edge(_) => self.config.edge_vm_gips,
            ComputeTarget::Cloud => self.config.cloud_vm_gips,
        };
        processing_time_s(length_gi, gips, share_pct)
    }

    /// First-fit admission: the lowest-indexed VM at `target` whose committed
    /// share still accommodates `share_pct`. `None` means a capacity failure.
    pub fn admit(&mut self, target: ComputeTarget, share_pct: f64, now: f64) -> Option<VmSlot> {
        let (vms, tier, server) = match target {
            ComputeTarget::Edge(j) => (&mut self.edge_vms[j], Tier::Edge, j),
            ComputeTarget::Cloud => (&mut self.cloud_vms, Tier::Cloud, 0),
        };
        let vm = vms
            .iter()
            .position(|&used| used + share_pct <= 100.0 + UTIL_EPS)?;
        self.integrate_to(now);
        match tier {
            Tier::Edge => {
                self.edge_vms[server][vm] += share_pct;
                self.edge_total_pct += share_pct;
            }
            Tier::Cloud => {
                self.cloud_vms[vm] += share_pct;
                self.cloud_total_pct += share_pct;
            }
        }
        Some(VmSlot { tier, server, vm })
    }

    /// Release the share a finished (or abandoned) task held.
    pub fn release(&mut self, slot: VmSlot, share_pct: f64, now: f64) {
        self.integrate_to(now);
        let used = match slot.tier {
            Tier::Edge => &mut self.edge_vms[slot.server][slot.vm],
            Tier::Cloud => &mut self.cloud_vms[slot.vm],
        };
        debug_assert!(*used + UTIL_EPS >= share_pct, "releasing more than committed");
        *used = (*used - share_pct).max(0.0);
        match slot.tier {
            Tier::Edge => self.edge_total_pct = (self.edge_total_pct - share_pct).max(0.0),
            Tier::Cloud => self.cloud_total_pct = (self.cloud_total_pct - share_pct).max(0.0),
        }
    }

    /// Mean committed share across one edge server's VMs, percent.
    pub fn edge_server_mean_load(&self, server: usize) -> f64 {
        let vms = &self.edge_vms[server];
        if vms.is_empty() {
            return 0.0;
        }
        vms.iter().sum::<f64>() / vms.len() as f64
    }

    /// Close the books at the run horizon; call once, then read the
    /// averages.
    pub fn finalize(&mut self, t_end: f64) {
        self.integrate_to(t_end);
    }

    /// Time-averaged edge VM utilization over `[0, duration]`, percent.
    pub fn avg_edge_utilization_pct(&self, duration: f64) -> f64 {
        let vm_count = self.edge_vms.len() * self.config.vms_per_edge_server;
        if vm_count == 0 || duration <= 0.0 {
            return 0.0;
        }
        self.edge_util_integral / (duration * vm_count as f64)
    }

    /// Time-averaged cloud VM utilization over `[0, duration]`, percent.
    pub fn avg_cloud_utilization_pct(&self, duration: f64) -> f64 {
        if self.config.cloud_vm_count == 0 || duration <= 0.0 {
            return 0.0;
        }
        self.cloud_util_integral / (duration * self.config.cloud_vm_count as f64)
    }
}
