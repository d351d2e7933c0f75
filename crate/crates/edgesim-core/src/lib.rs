//! Deterministic discrete-event core for a three-tier edge-computing network
//! with a pluggable task orchestrator.
//!
//! The crate simulates mobile devices that generate tasks and offload them to
//! one of several edge servers or to a central cloud. An orchestrator decides
//! the placement of every task; placements pay realistic network and compute
//! costs and end in one of four outcomes (success or a capacity / deadline /
//! mobility failure). Besides four rule-based orchestrators, the crate ships a
//! double deep-Q-network (DDQN) orchestrator that is trained online while the
//! simulation runs, using a ledger that fills in rewards and successor states
//! as task outcomes become known.
//!
//! ```text
//!                 +--------------------------+
//!                 |          cloud           |   4 VMs
//!                 +------------+-------------+
//!                              | WAN (per location)
//!   +-----------+   MAN    +---+-------+
//!   | edge srv 0|----------| edge srv j|          N servers, 8 VMs each
//!   +-----+-----+ (M/M/1)  +-----+-----+
//!         | WLAN 0               | WLAN j
//!      [devices]             [devices]            nomadic mobility
//! ```
//!
//! Layering (lower modules never depend on higher ones):
//!
//! * [`engine`] / [`rng`] — virtual clock, ordered event queue, named
//!   deterministic random streams.
//! * [`workload`] — application profiles, task generation, device mobility.
//! * [`network`] / [`compute`] — transfer delays, bandwidth contention,
//!   VM admission and processing.
//! * [`orchestrator`] — decision state vectors and the rule-based policies.
//! * [`nn`] / [`agent`] / [`bridge`] — hand-rolled dense network, DDQN
//!   learner, and the delayed-outcome memory ledger feeding it.
//! * [`scenario`] / [`metrics`] — one simulated run wired end to end and the
//!   metric accumulation it produces.
//!
//! The crate is `no_std` (with `alloc`); all file formats, configuration
//! parsing and the command-line harness live in the companion `edgesim`
//! crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod agent;
pub mod bridge;
pub mod compute;
pub mod engine;
pub mod math;
pub mod metrics;
pub mod network;
pub mod nn;
pub mod orchestrator;
pub mod rng;
pub mod scenario;
pub mod workload;

pub use agent::{AgentConfig, DdqnAgent, EpsilonSchedule, Normalizer, ReplayBuffer, Transition};
pub use bridge::{Bridge, MemoryItem};
pub use engine::{Engine, SimEvent};
pub use metrics::{OutcomeCounts, RunMetrics};
pub use orchestrator::{Action, PolicyKind, StateVector};
pub use rng::RngStream;
pub use scenario::{ScenarioConfig, Simulation};
pub use workload::{AppKind, ApplicationProfile, Task, TaskOutcome};
