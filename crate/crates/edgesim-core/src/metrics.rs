//! Outcome tallies and timing accumulators for one simulation run.
//!
//! Tasks end in exactly one of four outcomes; tasks still in flight when the
//! horizon closes are *censored* and excluded from both sides of the failure
//! ratio. Service time is door-to-door (arrival to download completion) and
//! is only meaningful for successes; processing time is tracked per compute
//! tier.

use crate::workload::{AppKind, TaskOutcome};

/// Success/failure tallies for one task population.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub success: u64,
    pub fail_capacity: u64,
    pub fail_deadline: u64,
    pub fail_mobility: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: TaskOutcome) {
        match outcome {
            TaskOutcome::Success => self.success += 1,
            TaskOutcome::FailCapacity => self.fail_capacity += 1,
            TaskOutcome::FailDeadline => self.fail_deadline += 1,
            TaskOutcome::FailMobility => self.fail_mobility += 1,
        }
    }

    pub fn failed(&self) -> u64 {
        self.fail_capacity + self.fail_deadline + self.fail_mobility
    }

    /// Tasks with a known outcome.
    pub fn completed(&self) -> u64 {
        self.success + self.failed()
    }

    /// Failed share of completed tasks, in percent; zero when nothing
    /// completed.
    pub fn failed_pct(&self) -> f64 {
        let completed = self.completed();
        if completed == 0 {
            0.0
        } else {
            100.0 * self.failed() as f64 / completed as f64
        }
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        self.success += other.success;
        self.fail_capacity += other.fail_capacity;
        self.fail_deadline += other.fail_deadline;
        self.fail_mobility += other.fail_mobility;
    }
}

/// Running mean of a duration sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimingAccumulator {
    pub sum_s: f64,
    pub count: u64,
}

impl TimingAccumulator {
    pub fn add(&mut self, seconds: f64) {
        self.sum_s += seconds;
        self.count += 1;
    }

    /// Mean in seconds; zero when empty.
    pub fn mean_s(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_s / self.count as f64
        }
    }
}

/// Everything one run reports: per-application and overall outcome counts,
/// timing means, censoring, and time-averaged VM utilization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    per_app: [OutcomeCounts; AppKind::ALL.len()],
    service_per_app: [TimingAccumulator; AppKind::ALL.len()],
    /// Processing time of successful tasks placed on edge servers.
    pub processing_edge: TimingAccumulator,
    /// Processing time of successful tasks placed on the cloud.
    pub processing_cloud: TimingAccumulator,
    /// Tasks still in flight when the horizon closed.
    pub censored: u64,
    /// Time-averaged busy share across all edge VMs, percent.
    pub avg_edge_utilization_pct: f64,
    /// Time-averaged busy share across all cloud VMs, percent.
    pub avg_cloud_utilization_pct: f64,
    /// Simulated horizon the averages refer to.
    pub duration_s: f64,
}

impl RunMetrics {
    pub fn record_outcome(&mut self, app: AppKind, outcome: TaskOutcome) {
        self.per_app[app.index()].record(outcome);
    }

    /// Door-to-door latency of one successful task.
    pub fn record_service_time(&mut self, app: AppKind, seconds: f64) {
        self.service_per_app[app.index()].add(seconds);
    }

    pub fn record_censored(&mut self) {
        self.censored += 1;
    }

    pub fn app_outcomes(&self, app: AppKind) -> &OutcomeCounts {
        &self.per_app[app.index()]
    }

    pub fn overall(&self) -> OutcomeCounts {
        let mut total = OutcomeCounts::default();
        for counts in &self.per_app {
            total.merge(counts);
        }
        total
    }

    pub fn app_service(&self, app: AppKind) -> &TimingAccumulator {
        &self.service_per_app[app.index()]
    }

    /// Mean service time over all successful tasks.
    pub fn avg_service_time_s(&self) -> f64 {
        let mut total = TimingAccumulator::default();
        for acc in &self.service_per_app {
            total.sum_s += acc.sum_s;
            total.count += acc.count;
        }
        total.mean_s()
    }

    /// Tasks that reached a decision: completed plus censored.
    pub fn generated(&self) -> u64 {
        self.overall().completed() + self.censored
    }

    /// Successes minus failures; the run-level learning score.
    pub fn cumulative_reward(&self) -> i64 {
        let overall = self.overall();
        overall.success as i64 - overall.failed() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_ratio_excludes_censored_tasks() {
        let mut m = RunMetrics::default();
        m.record_outcome(AppKind::AugmentedReality, TaskOutcome::Success);
        m.record_outcome(AppKind::AugmentedReality, TaskOutcome::Success);
        m.record_outcome(AppKind::AugmentedReality, TaskOutcome::FailDeadline);
        m.record_outcome(AppKind::Infotainment, TaskOutcome::FailMobility);
        m.record_censored();
        m.record_censored();
        let overall = m.overall();
        assert_eq!(overall.completed(), 4);
        assert_eq!(overall.failed(), 2);
        assert_eq!(overall.failed_pct(), 50.0);
        assert_eq!(m.censored, 2);
        assert_eq!(m.generated(), 6);
        assert_eq!(m.cumulative_reward(), 0);
    }

    #[test]
    fn empty_populations_report_zero_not_nan() {
        let m = RunMetrics::default();
        assert_eq!(m.overall().failed_pct(), 0.0);
        assert_eq!(m.avg_service_time_s(), 0.0);
        assert_eq!(m.processing_edge.mean_s(), 0.0);
    }

    #[test]
    fn per_app_counts_stay_separate() {
        let mut m = RunMetrics::default();
        m.record_outcome(AppKind::PervasiveHealth, TaskOutcome::FailCapacity);
        m.record_outcome(AppKind::ImageRendering, TaskOutcome::Success);
        assert_eq!(m.app_outcomes(AppKind::PervasiveHealth).fail_capacity, 1);
        assert_eq!(m.app_outcomes(AppKind::ImageRendering).success, 1);
        assert_eq!(m.app_outcomes(AppKind::AugmentedReality).completed(), 0);
    }

    #[test]
    fn service_means_aggregate_across_apps() {
        let mut m = RunMetrics::default();
        m.record_service_time(AppKind::AugmentedReality, 0.2);
        m.record_service_time(AppKind::AugmentedReality, 0.4);
        m.record_service_time(AppKind::Infotainment, 0.9);
        assert!((m.app_service(AppKind::AugmentedReality).mean_s() - 0.3).abs() < 1e-12);
        assert!((m.avg_service_time_s() - 0.5).abs() < 1e-12);
    }
}
