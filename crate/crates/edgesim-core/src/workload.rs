//! Application profiles, task generation and device mobility.
//!
//! Devices run exactly one application each; the per-application device
//! counts follow the configured usage percentages by largest-remainder
//! apportionment. Each device emits candidate task arrivals as a Poisson
//! process with the application's mean interarrival time, and every candidate
//! actually spawns a task with probability `duty_factor` — a thinned Poisson
//! process whose long-run rate is `duty_factor / mean_interarrival`, modelling
//! devices that use the application intermittently rather than continuously.
//!
//! Mobility is nomadic: a device dwells at a location for an exponential
//! time, then jumps to one of the *other* locations with probability
//! proportional to the destinations' attractiveness weights. More attractive
//! locations also hold devices longer (dwell mean scales with the weight).

use crate::rng::RngStream;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The four application classes devices can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AppKind {
    AugmentedReality,
    PervasiveHealth,
    ImageRendering,
    Infotainment,
}

impl AppKind {
    /// All kinds, in canonical order (also the profile array order).
    pub const ALL: [AppKind; 4] = [
        AppKind::AugmentedReality,
        AppKind::PervasiveHealth,
        AppKind::ImageRendering,
        AppKind::Infotainment,
    ];

    /// Position of this kind in [`AppKind::ALL`].
    pub fn index(self) -> usize {
        match self {
            AppKind::AugmentedReality => 0,
            AppKind::PervasiveHealth => 1,
            AppKind::ImageRendering => 2,
            AppKind::Infotainment => 3,
        }
    }

    /// Stable lowercase name, used in reports and config files.
    pub fn name(self) -> &'static str {
        match self {
            AppKind::AugmentedReality => "augmented_reality",
            AppKind::PervasiveHealth => "pervasive_health",
            AppKind::ImageRendering => "image_rendering",
            AppKind::Infotainment => "infotainment",
        }
    }
}

impl fmt::Display for AppKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Traffic and resource profile of one application class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ApplicationProfile {
    pub kind: AppKind,
    /// Mean gap between candidate task arrivals on one device, seconds.
    pub mean_interarrival_s: f64,
    /// Delay sensitivity in `[0, 1]`; higher means tighter deadlines.
    pub delay_sensitivity: f64,
    /// Task input size, KB.
    pub upload_kb: f64,
    /// Task result size, KB.
    pub download_kb: f64,
    /// VM share the task occupies on an edge VM, percent.
    pub vm_util_edge_pct: f64,
    /// VM share the task occupies on a cloud VM, percent.
    pub vm_util_cloud_pct: f64,
    /// Share of devices running this application, percent.
    pub usage_pct: f64,
    /// Computational size of one task, giga-instructions.
    pub task_length_gi: f64,
}

/// Workload-wide knobs plus the per-application profiles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct WorkloadConfig {
    /// Probability that a candidate arrival actually spawns a task.
    pub duty_factor: f64,
    /// Deadline at sensitivity 1.0; deadlines scale as `base / sensitivity`.
    pub base_deadline_s: f64,
    /// Lower clamp on sensitivity when mapping to a deadline, so weakly
    /// sensitive applications still get a finite deadline.
    pub sensitivity_floor: f64,
    pub applications: Vec<ApplicationProfile>,
}

impl Default for WorkloadConfig {
    /// The four-application mix. Task lengths are sized so that processing
    /// on the task's dedicated VM share lands just under the application's
    /// deadline, leaving headroom for uncongested transfers.
    fn default() -> Self {
        WorkloadConfig {
            duty_factor: 0.40,
            base_deadline_s: 0.5,
            sensitivity_floor: 0.05,
            applications: alloc::vec![
                ApplicationProfile {
                    kind: AppKind::AugmentedReality,
                    mean_interarrival_s: 2.0,
                    delay_sensitivity: 0.9,
                    upload_kb: 1500.0,
                    download_kb: 25.0,
                    vm_util_edge_pct: 6.0,
                    vm_util_cloud_pct: 0.6,
                    usage_pct: 30.0,
                    task_length_gi: 0.12,
                },
                ApplicationProfile {
                    kind: AppKind::PervasiveHealth,
                    mean_interarrival_s: 3.0,
                    delay_sensitivity: 0.7,
                    upload_kb: 20.0,
                    download_kb: 1250.0,
                    vm_util_edge_pct: 2.0,
                    vm_util_cloud_pct: 0.2,
                    usage_pct: 20.0,
                    task_length_gi: 0.01,
                },
                ApplicationProfile {
                    kind: AppKind::ImageRendering,
                    mean_interarrival_s: 20.0,
                    delay_sensitivity: 0.1,
                    upload_kb: 2500.0,
                    download_kb: 200.0,
                    vm_util_edge_pct: 30.0,
                    vm_util_cloud_pct: 3.0,
                    usage_pct: 20.0,
                    task_length_gi: 13.5,
                },
                ApplicationProfile {
                    kind: AppKind::Infotainment,
                    mean_interarrival_s: 7.0,
                    delay_sensitivity: 0.3,
                    upload_kb: 25.0,
                    download_kb: 1000.0,
                    vm_util_edge_pct: 10.0,
                    vm_util_cloud_pct: 1.0,
                    usage_pct: 30.0,
                    task_length_gi: 1.0,
                },
            ],
        }
    }
}

/// Configuration problems detected by [`WorkloadConfig::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadError {
    /// Usage percentages must cover all devices exactly.
    UsageDoesNotSumTo100 { sum: f64 },
    /// A profile carries a non-positive interarrival, length or size.
    NonPositiveField { app: AppKind, field: &'static str },
    /// Duty factor must lie in `(0, 1]`.
    DutyFactorOutOfRange { value: f64 },
    EmptyProfileSet,
}

impl fmt::Display for WorkloadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadError::UsageDoesNotSumTo100 { sum } => {
                write!(f, "application usage percentages sum to {sum}, expected 100")
            }
            WorkloadError::NonPositiveField { app, field } => {
                write!(f, "application {app} has non-positive {field}")
            }
            WorkloadError::DutyFactorOutOfRange { value } => {
                write!(f, "duty factor {value} is outside (0, 1]")
            }
            WorkloadError::EmptyProfileSet => f.write_str("no application profiles configured"),
        }
    }
}

impl WorkloadConfig {
    /// Check the profile set is usable before a run starts.
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.applications.is_empty() {
            return Err(WorkloadError::EmptyProfileSet);
        }
        if !(self.duty_factor > 0.0 && self.duty_factor <= 1.0) {
            return Err(WorkloadError::DutyFactorOutOfRange {
                value: self.duty_factor,
            });
        }
        let sum: f64 = self.applications.iter().map(|a| a.usage_pct).sum();
        if (sum - 100.0).abs() > 1e-6 {
            return Err(WorkloadError::UsageDoesNotSumTo100 { sum });
        }
        for app in &self.applications {
            for (field, value) in [
                ("mean_interarrival_s", app.mean_interarrival_s),
                ("task_length_gi", app.task_length_gi),
                ("upload_kb", app.upload_kb),
                ("download_kb", app.download_kb),
                ("vm_util_edge_pct", app.vm_util_edge_pct),
                ("vm_util_cloud_pct", app.vm_util_cloud_pct),
            ] {
                if !(value > 0.0) {
                    return Err(WorkloadError::NonPositiveField {
                        app: app.kind,
                        field,
                    });
                }
            }
        }
        Ok(())
    }

    /// Deadline for a task of the given application: `base / sensitivity`,
    /// with the sensitivity clamped below by the configured floor.
    pub fn deadline_s(&self, profile: &ApplicationProfile) -> f64 {
        self.base_deadline_s / profile.delay_sensitivity.max(self.sensitivity_floor)
    }

    /// Expected number of tasks spawned by `device_count` devices over
    /// `duration_s` seconds: each device of application k contributes at the
    /// thinned rate `duty_factor / mean_interarrival_k`, weighted by the
    /// application's device share.
    pub fn expected_total_tasks(&self, device_count: usize, duration_s: f64) -> f64 {
        let per_device_rate: f64 = self
            .applications
            .iter()
            .map(|a| (a.usage_pct / 100.0) / a.mean_interarrival_s)
            .sum();
        device_count as f64 * duration_s * self.duty_factor * per_device_rate
    }
}

/// Per-application device counts by largest-remainder apportionment of the
/// usage percentages. Counts sum to `device_count`; leftover seats go to the
/// largest fractional remainders, ties to the earlier profile.
pub fn assign_applications(device_count: usize, profiles: &[ApplicationProfile]) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(profiles.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(profiles.len());
    let mut assigned = 0usize;
    for (idx, app) in profiles.iter().enumerate() {
        let quota = device_count as f64 * app.usage_pct / 100.0;
        let floor = quota as usize; // quota >= 0, truncation is floor
        counts.push(floor);
        remainders.push((idx, quota - floor as f64));
        assigned += floor;
    }
    // Sort by descending remainder, index ascending on ties.
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut leftover = device_count - assigned;
    for (idx, _) in remainders {
        if leftover == 0 {
            break;
        }
        counts[idx] += 1;
        leftover -= 1;
    }
    counts
}

/// One mobile device: it runs a fixed application and roams between WLAN
/// locations.
#[derive(Debug, Clone)]
pub struct MobileDevice {
    pub id: usize,
    pub app: AppKind,
    pub current_wlan: usize,
}

/// How a task left the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskOutcome {
    Success,
    /// No VM at the chosen target could fit the task's share.
    FailCapacity,
    /// Missed its deadline, or a required link was saturated.
    FailDeadline,
    /// The device had roamed away from its home WLAN when the result
    /// arrived, so it could not be delivered.
    FailMobility,
}

impl TaskOutcome {
    pub fn is_success(self) -> bool {
        matches!(self, TaskOutcome::Success)
    }
}

/// One offloadable task. Profile-derived fields are snapshotted at spawn so
/// the task is self-contained through its lifecycle.
#[derive(Debug, Clone)]
pub struct Task {
    pub id: u64,
    pub app: AppKind,
    pub device_id: usize,
    /// WLAN (and edge-server location) the device was on when the task was
    /// created; all transfers use this location's links and the result must
    /// be delivered here.
    pub home_wlan_id: usize,
    /// Creation == decision time, seconds.
    pub created_at: f64,
    pub deadline_s: f64,
    pub length_gi: f64,
    pub upload_kb: f64,
    pub download_kb: f64,
    /// VM share needed on an edge VM, percent (also the state feature).
    pub required_capacity_pct: f64,
    /// VM share needed on a cloud VM, percent.
    pub required_capacity_cloud_pct: f64,
    pub delay_sensitivity: f64,
}

impl Task {
    /// Build a task for `device` at time `now` from its application profile.
    pub fn spawn(
        id: u64,
        device: &MobileDevice,
        profile: &ApplicationProfile,
        config: &WorkloadConfig,
        now: f64,
    ) -> Task {
        debug_assert_eq!(device.app, profile.kind, "device/profile mismatch");
        Task {
            id,
            app: profile.kind,
            device_id: device.id,
            home_wlan_id: device.current_wlan,
            created_at: now,
            deadline_s: config.deadline_s(profile),
            length_gi: profile.task_length_gi,
            upload_kb: profile.upload_kb,
            download_kb: profile.download_kb,
            required_capacity_pct: profile.vm_util_edge_pct,
            required_capacity_cloud_pct: profile.vm_util_cloud_pct,
            delay_sensitivity: profile.delay_sensitivity,
        }
    }
}

/// Gap until a device's next *candidate* arrival: exponential with the
/// application's mean interarrival time. Whether the candidate spawns a real
/// task is a separate `duty_factor` Bernoulli draw (see module docs).
pub fn next_task_time(profile: &ApplicationProfile, rng: &mut RngStream) -> f64 {
    rng.exponential(profile.mean_interarrival_s)
}

/// Mobility problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MobilityError {
    /// Every candidate destination has zero attractiveness, so no move can
    /// be drawn.
    DegenerateAttractiveness,
}

impl fmt::Display for MobilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MobilityError::DegenerateAttractiveness => {
                f.write_str("all candidate destinations have zero attractiveness")
            }
        }
    }
}

/// Nomadic mobility over the WLAN locations.
#[derive(Debug, Clone)]
pub struct MobilityModel {
    /// Attractiveness weight per location; drives both destination choice
    /// and dwell time.
    pub attractiveness: Vec<f64>,
    /// Dwell-time mean at a location of exactly average attractiveness.
    pub base_dwell_s: f64,
}

impl MobilityModel {
    pub fn new(attractiveness: Vec<f64>, base_dwell_s: f64) -> Self {
        MobilityModel {
            attractiveness,
            base_dwell_s,
        }
    }

    fn mean_weight(&self) -> f64 {
        let n = self.attractiveness.len().max(1);
        self.attractiveness.iter().sum::<f64>() / n as f64
    }

    /// Dwell time drawn for a stay at `location`: exponential with mean
    /// `base_dwell * weight(location) / mean_weight`, so a location twice as
    /// attractive as average holds devices twice as long.
    pub fn dwell_time(&self, location: usize, rng: &mut RngStream) -> f64 {
        let mean_w = self.mean_weight();
        let scale = if mean_w > 0.0 {
            self.attractiveness[location] / mean_w
        } else {
            1.0
        };
        rng.exponential(self.base_dwell_s * scale)
    }

    /// Initial placement: location drawn proportionally to attractiveness.
    pub fn initial_location(&self, rng: &mut RngStream) -> Result<usize, MobilityError> {
        rng.weighted_index(&self.attractiveness)
            .ok_or(MobilityError::DegenerateAttractiveness)
    }

    /// Draw the next location (never the current one, proportional to the
    /// other locations' attractiveness) and the dwell time to spend there.
    pub fn nomadic_move(
        &self,
        current: usize,
        rng: &mut RngStream,
    ) -> Result<(usize, f64), MobilityError> {
        let mut weights: Vec<f64> = self.attractiveness.clone();
        weights[current] = 0.0;
        let next = rng
            .weighted_index(&weights)
            .ok_or(MobilityError::DegenerateAttractiveness)?;
        let dwell = self.dwell_time(next, rng);
        Ok((next, dwell))
    }
}
