//! Pairs decision-time snapshots with effects that land much later.
//!
//! A placement decision is made the instant a task arrives, but two of the
//! three pieces of its learning sample only exist later:
//!
//! * the *reward* arrives when the task finally succeeds or fails, many
//!   simulated seconds after the decision;
//! * the *successor state* is the snapshot taken at the **next** decision,
//!   which belongs to a different task entirely.
//!
//! The bridge keeps one pending item per decision and releases a complete
//! [`Transition`] only once both pieces have landed, in whichever order they
//! arrive. At the end of an episode the most recent decision has no
//! successor; if its reward arrived it is released as a terminal self-loop
//! (its own state doubles as the successor, `is_done = true`). Items whose
//! reward never arrived — tasks still in flight when the episode ended — are
//! dropped rather than guessed at.

use crate::agent::Transition;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

/// One decision awaiting its delayed effects.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryItem {
    /// Normalized state snapshot taken when the decision was made.
    pub state: Vec<f64>,
    /// Placement chosen for that state.
    pub action: usize,
    /// Reward, once the task's outcome is known.
    pub value: Option<f64>,
    /// Snapshot taken at the next decision.
    pub next_state: Option<Vec<f64>>,
    /// Whether this decision ends its episode.
    pub is_done: bool,
}

impl MemoryItem {
    fn is_complete(&self) -> bool {
        self.value.is_some() && self.next_state.is_some()
    }
}

/// Outcome reported for a task the bridge is not tracking: either it never
/// made a decision here, or its outcome was already recorded once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownTask {
    pub task_id: u64,
}

impl fmt::Display for UnknownTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task {} has no pending decision", self.task_id)
    }
}

/// What an episode flush released and what it had to discard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlushStats {
    /// Transitions completed by the flush itself (the terminal self-loop).
    pub forwarded: usize,
    /// Pending items discarded because their reward never arrived.
    pub dropped: usize,
}

/// Assembles [`Transition`]s from decisions, delayed rewards, and
/// next-decision snapshots. See the module docs for the pairing rules.
#[derive(Debug, Clone, Default)]
pub struct Bridge {
    pending: BTreeMap<u64, MemoryItem>,
    /// Maps a task to the decision made for it, until its outcome arrives.
    task_to_decision: BTreeMap<u64, u64>,
    /// Most recent decision: the one whose successor snapshot is still open.
    latest_decision: Option<u64>,
    next_decision_id: u64,
    ready: Vec<Transition>,
}

impl Bridge {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of decisions still waiting for a reward or a successor.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Register the decision made for `task_id`: remember its state/action
    /// pair and hand the snapshot to the previous decision as its successor.
    pub fn record_decision(&mut self, task_id: u64, state: Vec<f64>, action: usize) {
        let id = self.next_decision_id;
        self.next_decision_id += 1;
        if let Some(prev) = self.latest_decision {
            if let Some(item) = self.pending.get_mut(&prev) {
                item.next_state = Some(state.clone());
            }
            self.try_forward(prev);
        }
        self.pending.insert(
            id,
            MemoryItem {
                state,
                action,
                value: None,
                next_state: None,
                is_done: false,
            },
        );
        self.task_to_decision.insert(task_id, id);
        self.latest_decision = Some(id);
    }

    /// Record the task's reward. `is_last` marks the episode's final task,
    /// whose transition must not bootstrap from a successor value.
    pub fn record_outcome(
        &mut self,
        task_id: u64,
        reward: f64,
        is_last: bool,
    ) -> Result<(), UnknownTask> {
        let decision = self
            .task_to_decision
            .remove(&task_id)
            .ok_or(UnknownTask { task_id })?;
        let item = self
            .pending
            .get_mut(&decision)
            .expect("task ledger only points at pending decisions");
        item.value = Some(reward);
        if is_last {
            item.is_done = true;
        }
        self.try_forward(decision);
        Ok(())
    }

    /// Release the decision if both its delayed pieces have landed.
    fn try_forward(&mut self, decision: u64) {
        let complete = self
            .pending
            .get(&decision)
            .is_some_and(MemoryItem::is_complete);
        if !complete {
            return;
        }
        let item = self.pending.remove(&decision).unwrap();
        if self.latest_decision == Some(decision) {
            self.latest_decision = None;
        }
        self.ready.push(Transition {
            state: item.state,
            action: item.action,
            reward: item.value.unwrap(),
            next_state: item.next_state.unwrap(),
            is_done: item.is_done,
        });
    }

    /// Completed transitions, in the order they became complete.
    pub fn drain(&mut self) -> Vec<Transition> {
        core::mem::take(&mut self.ready)
    }

    /// Episode boundary. The newest decision never receives a successor
    /// snapshot: if its reward arrived it becomes a terminal self-loop.
    /// Every other pending item is missing its reward (the task was still in
    /// flight at the horizon) and is dropped. Leaves the bridge empty.
    pub fn flush_episode(&mut self) -> FlushStats {
        let mut stats = FlushStats::default();
        if let Some(last) = self.latest_decision.take() {
            if let Some(item) = self.pending.get_mut(&last) {
                if item.value.is_some() {
                    item.next_state = Some(item.state.clone());
                    item.is_done = true;
                    self.try_forward(last);
                    stats.forwarded += 1;
                }
            }
        }
        stats.dropped = self.pending.len();
        self.pending.clear();
        self.task_to_decision.clear();
        stats
    }
}
