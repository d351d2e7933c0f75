//! Full scenario driver: devices generating tasks under mobility, an
//! orchestrator placing each task, and the network/compute models carrying it
//! through its lifecycle.
//!
//! Each spawned task walks the same path:
//!
//! ```text
//! arrival -> decision -> upload -> admit -> process -> download -> outcome
//! ```
//!
//! with three failure exits: a saturated link at either transfer start
//! (deadline failure — the transfer could never finish in time), no VM with
//! enough headroom at admission (capacity failure), and, at delivery, either
//! the device having left its home WLAN (mobility failure) or the
//! door-to-door time exceeding the task's deadline.
//!
//! Randomness is split across named streams so that the workload and
//! mobility traces for a given master seed are identical whichever
//! orchestrator is plugged in; only the policy's own stream differs.
//! Tasks still in flight when the horizon closes are counted as censored,
//! not failed.

use crate::agent::{AgentError, DdqnAgent, Normalizer};
use crate::bridge::Bridge;
use crate::compute::{ComputeConfig, ComputeModel, ComputeTarget, Tier, VmSlot};
use crate::engine::Engine;
use crate::metrics::RunMetrics;
use crate::network::{NetworkConfig, NetworkModel, Route, TransferLease};
use crate::orchestrator::{
    build_state, classify_offload, decide_hybrid, decide_network_based, decide_random,
    decide_utilization_based, Action, BaselineConfig, OffloadCounters, OffloadKind, PolicyKind,
    StateVector, FIXED_FEATURES,
};
use crate::rng::RngStream;
use crate::workload::{
    assign_applications, next_task_time, MobileDevice, MobilityModel, Task, TaskOutcome,
    WorkloadConfig, WorkloadError,
};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

/// Everything the event queue carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventPayload {
    /// A device's next candidate task generation instant.
    TaskArrival { device_id: usize },
    UploadComplete { task_id: u64 },
    ProcessingComplete { task_id: u64 },
    DownloadComplete { task_id: u64 },
    MobilityMove { device_id: usize },
    /// Horizon marker; carries no behavior of its own.
    EpisodeEnd,
}

/// Default location attractiveness: weights cycling 1, 2, 3 across the
/// locations, so some WLANs draw visibly more devices than others.
pub fn default_attractiveness(locations: usize) -> Vec<f64> {
    (0..locations).map(|i| ((i % 3) + 1) as f64).collect()
}

/// One runnable cell: topology size, load, horizon, seed, and every model's
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub edge_server_count: usize,
    pub device_count: usize,
    pub duration_s: f64,
    /// Master seed; every named stream derives from it.
    pub master_seed: u64,
    pub workload: WorkloadConfig,
    /// One nonnegative weight per location.
    pub attractiveness: Vec<f64>,
    /// Mean dwell time at a location of average attractiveness, seconds.
    pub base_dwell_s: f64,
    pub network: NetworkConfig,
    pub compute: ComputeConfig,
    pub baselines: BaselineConfig,
}

impl ScenarioConfig {
    /// A scenario with every model at its defaults.
    pub fn new(
        edge_server_count: usize,
        device_count: usize,
        duration_s: f64,
        master_seed: u64,
    ) -> Self {
        ScenarioConfig {
            edge_server_count,
            device_count,
            duration_s,
            master_seed,
            workload: WorkloadConfig::default(),
            attractiveness: default_attractiveness(edge_server_count),
            base_dwell_s: 60.0,
            network: NetworkConfig::default(),
            compute: ComputeConfig::default(),
            baselines: BaselineConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.edge_server_count == 0 {
            return Err(ScenarioError::InvalidConfig("edge_server_count must be positive"));
        }
        if self.device_count == 0 {
            return Err(ScenarioError::InvalidConfig("device_count must be positive"));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(ScenarioError::InvalidConfig("duration_s must be positive and finite"));
        }
        if self.attractiveness.len() != self.edge_server_count {
            return Err(ScenarioError::InvalidConfig(
                "attractiveness needs exactly one weight per edge location",
            ));
        }
        if self.attractiveness.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ScenarioError::InvalidConfig(
                "attractiveness weights must be finite and nonnegative",
            ));
        }
        let positive_weights = self.attractiveness.iter().filter(|w| **w > 0.0).count();
        // With one location devices never move; with more, every location
        // must have somewhere else to go, which needs two positive weights.
        let needed = if self.edge_server_count == 1 { 1 } else { 2 };
        if positive_weights < needed {
            return Err(ScenarioError::InvalidConfig(
                "attractiveness needs enough positive weights for movement",
            ));
        }
        if !(self.base_dwell_s > 0.0) {
            return Err(ScenarioError::InvalidConfig("base_dwell_s must be positive"));
        }
        self.workload.validate()?;
        let net = &self.network;
        if !(net.wlan.nominal_mbps > 0.0)
            || !(net.wan.nominal_mbps > 0.0)
            || net.wlan.saturation_clients == 0
            || net.wan.saturation_clients == 0
        {
            return Err(ScenarioError::InvalidConfig(
                "link tables need positive bandwidth and saturation limits",
            ));
        }
        if !(net.man_service_rate > 0.0) || !(net.man_window_s > 0.0) || !(net.man_state_cap_s > 0.0)
        {
            return Err(ScenarioError::InvalidConfig(
                "backbone parameters must be positive",
            ));
        }
        let cpu = &self.compute;
        if cpu.vms_per_edge_server == 0
            || cpu.cloud_vm_count == 0
            || !(cpu.edge_vm_gips > 0.0)
            || !(cpu.cloud_vm_gips > 0.0)
        {
            return Err(ScenarioError::InvalidConfig(
                "compute tiers need VMs with positive capacity",
            ));
        }
        Ok(())
    }

    /// Expected number of spawned tasks over the whole run.
    pub fn expected_total_tasks(&self) -> f64 {
        self.workload
            .expected_total_tasks(self.device_count, self.duration_s)
    }

    /// Feature scaling matched to this scenario's magnitudes.
    pub fn normalizer(&self) -> Normalizer {
        Normalizer {
            wan_nominal_mbps: self.network.wan.nominal_mbps,
            man_delay_cap_s: self.network.man_state_cap_s,
            server_count: self.edge_server_count,
            expected_total_tasks: self.expected_total_tasks(),
            active_man_cap: self.network.man_service_rate * self.network.man_window_s,
        }
    }
}

/// Why a run could not start.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidConfig(&'static str),
    Workload(WorkloadError),
    /// The supplied agent was built for a different topology size.
    AgentShapeMismatch {
        expected_inputs: usize,
        actual_inputs: usize,
    },
    /// The learning policy was requested by name without an agent attached.
    DeepEdgeNeedsAgent,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::InvalidConfig(msg) => write!(f, "invalid scenario: {msg}"),
            ScenarioError::Workload(e) => write!(f, "invalid workload: {e}"),
            ScenarioError::AgentShapeMismatch {
                expected_inputs,
                actual_inputs,
            } => write!(
                f,
                "agent expects {actual_inputs} state features, scenario produces {expected_inputs}"
            ),
            ScenarioError::DeepEdgeNeedsAgent => {
                write!(f, "the learning orchestrator needs an agent instance")
            }
        }
    }
}

impl From<WorkloadError> for ScenarioError {
    fn from(e: WorkloadError) -> Self {
        ScenarioError::Workload(e)
    }
}

/// How decisions are made during a run.
pub enum PolicyHandle<'a> {
    /// One of the deterministic/random rule policies.
    Rule(PolicyKind),
    /// Learning mode: epsilon-greedy actions, delayed transitions assembled
    /// and trained on as they complete.
    Learn(&'a mut DdqnAgent),
    /// Frozen evaluation: greedy actions, no memory, no training.
    Greedy(&'a mut DdqnAgent),
}

/// Optional extras a run can record.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every decision-time state vector (raw, unnormalized).
    pub record_decision_states: bool,
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    /// Decision-time states, in decision order; empty unless requested.
    pub decision_states: Vec<StateVector>,
    /// Learning samples handed to the agent (learning mode only).
    pub transitions_forwarded: usize,
    /// Pending samples discarded at the horizon (learning mode only).
    pub transitions_dropped: usize,
}

/// A task in flight, with whatever resources it currently holds.
struct LiveTask {
    task: Task,
    route: Route,
    target: ComputeTarget,
    share_pct: f64,
    /// The transfer leg currently occupying links (upload, then download).
    lease: Option<TransferLease>,
    slot: Option<VmSlot>,
    processing_started_at: f64,
}

/// Entry points for running one scenario cell.
pub struct Simulation;

impl Simulation {
    /// Run one cell to its horizon.
    pub fn run(
        config: &ScenarioConfig,
        policy: PolicyHandle<'_>,
        options: RunOptions,
    ) -> Result<RunOutput, ScenarioError> {
        config.validate()?;
        if let PolicyHandle::Rule(PolicyKind::DeepEdge) = policy {
            return Err(ScenarioError::DeepEdgeNeedsAgent);
        }
        let expected_inputs = FIXED_FEATURES + config.edge_server_count;
        if let PolicyHandle::Learn(agent) | PolicyHandle::Greedy(agent) = &policy {
            let net = agent.online_network();
            if net.input_dim() != expected_inputs
                || net.output_dim() != config.edge_server_count + 1
            {
                return Err(ScenarioError::AgentShapeMismatch {
                    expected_inputs,
                    actual_inputs: net.input_dim(),
                });
            }
        }
        Runner::new(config, policy, options).run()
    }

    /// Convenience wrapper for the rule policies.
    pub fn run_baseline(
        config: &ScenarioConfig,
        kind: PolicyKind,
    ) -> Result<RunMetrics, ScenarioError> {
        Simulation::run(config, PolicyHandle::Rule(kind), RunOptions::default())
            .map(|out| out.metrics)
    }
}

struct Runner<'a> {
    config: &'a ScenarioConfig,
    policy: PolicyHandle<'a>,
    engine: Engine<EventPayload>,
    devices: Vec<MobileDevice>,
    /// Index into `config.workload.applications` per device.
    device_profile: Vec<usize>,
    mobility: MobilityModel,
    network: NetworkModel,
    compute: ComputeModel,
    counters: OffloadCounters,
    metrics: RunMetrics,
    live: BTreeMap<u64, LiveTask>,
    next_task_id: u64,
    workload_rng: RngStream,
    mobility_rng: RngStream,
    policy_rng: RngStream,
    bridge: Bridge,
    normalizer: Normalizer,
    decision_log: Option<Vec<StateVector>>,
    forwarded: usize,
}

impl<'a> Runner<'a> {
    fn new(config: &'a ScenarioConfig, policy: PolicyHandle<'a>, options: RunOptions) -> Self {
        let mut mobility_rng = RngStream::new(config.master_seed, "mobility");
        let mobility =
            MobilityModel::new(config.attractiveness.clone(), config.base_dwell_s);
        let app_counts = assign_applications(config.device_count, &config.workload.applications);
        let mut device_profile = Vec::with_capacity(config.device_count);
        for (profile_idx, &count) in app_counts.iter().enumerate() {
            device_profile.extend(core::iter::repeat_n(profile_idx, count));
        }
        let mut devices = Vec::with_capacity(config.device_count);
        for (id, &profile_idx) in device_profile.iter().enumerate() {
            let location = mobility
                .initial_location(&mut mobility_rng)
                .expect("validated attractiveness is never degenerate");
            devices.push(MobileDevice {
                id,
                app: config.workload.applications[profile_idx].kind,
                current_wlan: location,
            });
        }
        Runner {
            normalizer: config.normalizer(),
            engine: Engine::new(),
            device_profile,
            devices,
            mobility,
            network: NetworkModel::new(config.edge_server_count, config.network.clone()),
            compute: ComputeModel::new(config.edge_server_count, config.compute.clone()),
            counters: OffloadCounters::default(),
            metrics: RunMetrics::default(),
            live: BTreeMap::new(),
            next_task_id: 0,
            workload_rng: RngStream::new(config.master_seed, "workload"),
            mobility_rng,
            policy_rng: RngStream::new(config.master_seed, "agent-exploration"),
            bridge: Bridge::new(),
            decision_log: options.record_decision_states.then(Vec::new),
            forwarded: 0,
            config,
            policy,
        }
    }

    fn run(mut self) -> Result<RunOutput, ScenarioError> {
        let horizon = self.config.duration_s;
        for device_id in 0..self.devices.len() {
            let profile = &self.config.workload.applications[self.device_profile[device_id]];
            let gap = next_task_time(profile, &mut self.workload_rng);
            self.engine
                .schedule(gap, EventPayload::TaskArrival { device_id })
                .expect("initial arrivals are in the future");
        }
        // A single location leaves nowhere to move to; devices stay put.
        if self.config.edge_server_count > 1 {
            for device_id in 0..self.devices.len() {
                let dwell = self
                    .mobility
                    .dwell_time(self.devices[device_id].current_wlan, &mut self.mobility_rng);
                self.engine
                    .schedule(dwell, EventPayload::MobilityMove { device_id })
                    .expect("initial dwells are in the future");
            }
        }
        self.engine
            .schedule(horizon, EventPayload::EpisodeEnd)
            .expect("the horizon is in the future");

        while let Some(event) = self.engine.pop_due(horizon) {
            let now = event.time;
            match event.payload {
                EventPayload::TaskArrival { device_id } => self.on_task_arrival(device_id, now),
                EventPayload::UploadComplete { task_id } => self.on_upload_complete(task_id, now),
                EventPayload::ProcessingComplete { task_id } => {
                    self.on_processing_complete(task_id, now)
                }
                EventPayload::DownloadComplete { task_id } => {
                    self.on_download_complete(task_id, now)
                }
                EventPayload::MobilityMove { device_id } => self.on_mobility_move(device_id, now),
                EventPayload::EpisodeEnd => {}
            }
        }
        self.engine.advance_to(horizon);

        // Tasks still holding resources at the horizon are censored: they
        // never reached an outcome, so they count on neither side of the
        // failure ratio.
        for _ in 0..self.live.len() {
            self.metrics.record_censored();
        }
        self.live.clear();

        let mut dropped = 0;
        if matches!(self.policy, PolicyHandle::Learn(_)) {
            let stats = self.bridge.flush_episode();
            dropped = stats.dropped;
            self.pump_transitions();
        }

        self.compute.finalize(horizon);
        self.metrics.avg_edge_utilization_pct = self.compute.avg_edge_utilization_pct(horizon);
        self.metrics.avg_cloud_utilization_pct = self.compute.avg_cloud_utilization_pct(horizon);
        self.metrics.duration_s = horizon;

        Ok(RunOutput {
            metrics: self.metrics,
            decision_states: self.decision_log.unwrap_or_default(),
            transitions_forwarded: self.forwarded,
            transitions_dropped: dropped,
        })
    }

    /// Pick a placement for the snapshot state. Returns the normalized copy
    /// when the policy consumed one, so learning mode normalizes only once.
    fn decide(&mut self, state: &StateVector) -> (Action, Option<Vec<f64>>) {
        match &mut self.policy {
            PolicyHandle::Rule(kind) => {
                let action = match kind {
                    PolicyKind::NetworkBased => {
                        decide_network_based(state, &self.config.baselines)
                    }
                    PolicyKind::UtilizationBased => {
                        decide_utilization_based(state, &self.config.baselines)
                    }
                    PolicyKind::Hybrid => decide_hybrid(state, &self.config.baselines),
                    PolicyKind::Random => decide_random(state, &mut self.policy_rng),
                    PolicyKind::DeepEdge => unreachable!("rejected before the run started"),
                };
                (action, None)
            }
            PolicyHandle::Learn(agent) => {
                let normalized = self.normalizer.normalize(state);
                let action = agent
                    .act(&normalized, &mut self.policy_rng)
                    .expect("agent shape was validated against the scenario");
                (action, Some(normalized))
            }
            PolicyHandle::Greedy(agent) => {
                let normalized = self.normalizer.normalize(state);
                let action = agent
                    .greedy_action(&normalized)
                    .expect("agent shape was validated against the scenario");
                (action, None)
            }
        }
    }

    fn on_task_arrival(&mut self, device_id: usize, now: f64) {
        let profile = &self.config.workload.applications[self.device_profile[device_id]];
        // The candidate renewal chain continues whether or not this
        // candidate spawns a task.
        let gap = next_task_time(profile, &mut self.workload_rng);
        self.engine
            .schedule(now + gap, EventPayload::TaskArrival { device_id })
            .expect("renewal gaps are nonnegative");
        if !self
            .workload_rng
            .bernoulli(self.config.workload.duty_factor)
        {
            return;
        }

        let task_id = self.next_task_id;
        self.next_task_id += 1;
        let task = Task::spawn(
            task_id,
            &self.devices[device_id],
            profile,
            &self.config.workload,
            now,
        );

        let state = build_state(&task, &self.counters, &mut self.network, &self.compute, now);
        let (action, normalized) = self.decide(&state);
        let n = self.config.edge_server_count;
        let kind = classify_offload(action, task.home_wlan_id, n);
        self.counters.record_dispatch(kind);
        if let Some(log) = &mut self.decision_log {
            log.push(state);
        }
        if let Some(normalized) = normalized {
            self.bridge.record_decision(task_id, normalized, action.0);
        }

        let route = match kind {
            OffloadKind::Wlan => Route::HomeEdge,
            OffloadKind::Man => Route::RemoteEdge,
            OffloadKind::Wan => Route::Cloud,
        };
        let target = action.target(n);
        let share_pct = ComputeModel::required_share_pct(
            target,
            task.required_capacity_pct,
            task.required_capacity_cloud_pct,
        );
        let home = task.home_wlan_id;
        let upload_kb = task.upload_kb;
        self.live.insert(
            task_id,
            LiveTask {
                task,
                route,
                target,
                share_pct,
                lease: None,
                slot: None,
                processing_started_at: 0.0,
            },
        );

        match self
            .network
            .begin_transfer(route, home, upload_kb, now, kind == OffloadKind::Man)
        {
            Ok(lease) => {
                let delay = lease.delay_s;
                self.live.get_mut(&task_id).unwrap().lease = Some(lease);
                self.engine
                    .schedule(now + delay, EventPayload::UploadComplete { task_id })
                    .expect("transfer delays are nonnegative");
            }
            // No room on some link of the route: the task cannot make its
            // deadline, and fails immediately.
            Err(_) => self.finalize(task_id, TaskOutcome::FailDeadline, now),
        }
    }

    fn on_upload_complete(&mut self, task_id: u64, now: f64) {
        let (lease, target, share_pct, length_gi) = {
            let live = self.live.get_mut(&task_id).expect("upload for a live task");
            (
                live.lease.take().expect("upload leg holds a lease"),
                live.target,
                live.share_pct,
                live.task.length_gi,
            )
        };
        self.network.end_transfer(&lease, now);
        if lease.man_counts_as_departure {
            // The task reached its destination edge server; it no longer
            // rides the backbone.
            self.counters.man_arrived();
        }
        match self.compute.admit(target, share_pct, now) {
            Some(slot) => {
                let processing = self
                    .compute
                    .processing_time_for(target, length_gi, share_pct);
                let live = self.live.get_mut(&task_id).unwrap();
                live.slot = Some(slot);
                live.processing_started_at = now;
                self.engine
                    .schedule(now + processing, EventPayload::ProcessingComplete { task_id })
                    .expect("processing times are nonnegative");
            }
            None => self.finalize(task_id, TaskOutcome::FailCapacity, now),
        }
    }

    fn on_processing_complete(&mut self, task_id: u64, now: f64) {
        let (slot, share_pct, route, home, download_kb, started) = {
            let live = self.live.get_mut(&task_id).expect("processing for a live task");
            (
                live.slot.take().expect("processing holds a VM slot"),
                live.share_pct,
                live.route,
                live.task.home_wlan_id,
                live.task.download_kb,
                live.processing_started_at,
            )
        };
        let tier = slot.tier;
        self.compute.release(slot, share_pct, now);
        match tier {
            Tier::Edge => self.metrics.processing_edge.add(now - started),
            Tier::Cloud => self.metrics.processing_cloud.add(now - started),
        }
        // The result returns over the same links; its completion is not a
        // backbone departure for the arrival-rate estimator.
        match self
            .network
            .begin_transfer(route, home, download_kb, now, false)
        {
            Ok(lease) => {
                let delay = lease.delay_s;
                self.live.get_mut(&task_id).unwrap().lease = Some(lease);
                self.engine
                    .schedule(now + delay, EventPayload::DownloadComplete { task_id })
                    .expect("transfer delays are nonnegative");
            }
            Err(_) => self.finalize(task_id, TaskOutcome::FailDeadline, now),
        }
    }

    fn on_download_complete(&mut self, task_id: u64, now: f64) {
        let (lease, device_id, home, created, deadline) = {
            let live = self.live.get_mut(&task_id).expect("download for a live task");
            (
                live.lease.take().expect("download leg holds a lease"),
                live.task.device_id,
                live.task.home_wlan_id,
                live.task.created_at,
                live.task.deadline_s,
            )
        };
        self.network.end_transfer(&lease, now);
        // Mobility is checked first: a result that cannot be delivered fails
        // regardless of how fast it was computed.
        let outcome = if self.devices[device_id].current_wlan != home {
            TaskOutcome::FailMobility
        } else if now - created <= deadline {
            TaskOutcome::Success
        } else {
            TaskOutcome::FailDeadline
        };
        self.finalize(task_id, outcome, now);
    }

    fn on_mobility_move(&mut self, device_id: usize, now: f64) {
        let current = self.devices[device_id].current_wlan;
        let (next, dwell) = self
            .mobility
            .nomadic_move(current, &mut self.mobility_rng)
            .expect("validated attractiveness always offers a destination");
        self.devices[device_id].current_wlan = next;
        self.engine
            .schedule(now + dwell, EventPayload::MobilityMove { device_id })
            .expect("dwell times are nonnegative");
    }

    /// Settle a task's outcome: tally it, report the reward in learning
    /// mode, and retire the task.
    fn finalize(&mut self, task_id: u64, outcome: TaskOutcome, now: f64) {
        let live = self.live.remove(&task_id).expect("finalize targets a live task");
        debug_assert!(live.lease.is_none() && live.slot.is_none());
        self.metrics.record_outcome(live.task.app, outcome);
        if outcome.is_success() {
            self.metrics
                .record_service_time(live.task.app, now - live.task.created_at);
        }
        if matches!(self.policy, PolicyHandle::Learn(_)) {
            let reward = if outcome.is_success() { 1.0 } else { -1.0 };
            self.bridge
                .record_outcome(task_id, reward, false)
                .expect("every live task registered a decision");
            self.pump_transitions();
        }
    }

    /// Hand completed learning samples to the agent, training once per
    /// sample as soon as the replay can fill a minibatch.
    fn pump_transitions(&mut self) {
        let PolicyHandle::Learn(agent) = &mut self.policy else {
            return;
        };
        for transition in self.bridge.drain() {
            agent.observe(transition);
            self.forwarded += 1;
            match agent.train_step(&mut self.policy_rng) {
                Ok(_) | Err(AgentError::InsufficientExperience { .. }) => {}
                Err(AgentError::Net(e)) => panic!("training step failed: {e}"),
            }
        }
    }
}
