//! Double-DQN learner: epsilon-greedy policy, uniform replay, target network.
//!
//! The agent keeps two equally shaped networks. The *online* network picks
//! actions and is trained every step; the *target* network only serves as a
//! slowly moving evaluation anchor and is overwritten with the online
//! parameters every `target_sync_period` training steps.
//!
//! The training target for a transition `(s, a, r, s', done)` is the
//! double-DQN rule: the online network *selects* the successor action,
//! the target network *evaluates* it —
//!
//! ```text
//! y = r                                                if done
//! y = r + discount * Q_target(s', argmax_a Q_online(s', a))   otherwise
//! ```
//!
//! Selecting and evaluating with the same (target) network instead gives the
//! plain DQN rule, which systematically overestimates; both are implemented
//! so the relationship is testable. Each training step samples a minibatch
//! uniformly *with replacement*, accumulates the gradient of
//! `0.5 * (Q(s,a) - y)^2` over it (averaged by default), and applies one SGD
//! step.

use crate::nn::{DenseNetwork, Gradients, NnError, Workspace};
use crate::orchestrator::{Action, StateVector, FIXED_FEATURES};
use crate::rng::RngStream;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One learning sample. States are stored already normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub is_done: bool,
}

/// Fixed-capacity ring of transitions; evicts oldest first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: VecDeque::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, evicting the oldest transition when full.
    pub fn push(&mut self, transition: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    /// Oldest-to-newest iteration (eviction order).
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `k` transitions drawn uniformly with replacement.
    pub fn sample<'a>(&'a self, k: usize, rng: &mut RngStream) -> Vec<&'a Transition> {
        debug_assert!(!self.is_empty());
        (0..k).map(|_| &self.items[rng.index(self.items.len())]).collect()
    }
}

/// Exploration schedule: multiplicative decay per episode with a floor.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    current: f64,
    decay: f64,
    floor: f64,
}

impl EpsilonSchedule {
    pub fn new(initial: f64, decay: f64, floor: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&initial));
        debug_assert!((0.0..=1.0).contains(&decay));
        debug_assert!(floor >= 0.0 && floor <= initial);
        EpsilonSchedule {
            current: initial,
            decay,
            floor,
        }
    }

    pub fn value(&self) -> f64 {
        self.current
    }

    /// Decay once (called at the end of each training episode); never drops
    /// below the floor.
    pub fn end_episode(&mut self) {
        self.current = (self.current * self.decay).max(self.floor);
    }

    /// Set the exploration level directly (checkpoint resume, or zero for
    /// greedy evaluation). The decay floor applies only to decay itself.
    pub fn set_value(&mut self, value: f64) {
        self.current = value.clamp(0.0, 1.0);
    }
}

/// Maps raw state features into `[0, 1]` for the networks.
///
/// Per-feature maxima: WAN bandwidth by its nominal value, MAN delay by its
/// state cap, shares and loads by 100%, the WLAN id by `N - 1`, cumulative
/// offload counters by the scenario's expected total task count, and the
/// active-MAN count by the number of tasks the MAN can hold over one
/// estimator window. Everything clamps into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub wan_nominal_mbps: f64,
    pub man_delay_cap_s: f64,
    pub server_count: usize,
    pub expected_total_tasks: f64,
    pub active_man_cap: f64,
}

impl Normalizer {
    pub fn normalize(&self, state: &StateVector) -> Vec<f64> {
        let raw = state.as_slice();
        debug_assert_eq!(raw.len(), FIXED_FEATURES + self.server_count);
        let mut out = Vec::with_capacity(raw.len());
        let unit = |v: f64| v.clamp(0.0, 1.0);
        out.push(unit(raw[0] / self.wan_nominal_mbps));
        out.push(unit(raw[1] / self.man_delay_cap_s));
        out.push(unit(raw[2] / 100.0));
        let id_span = (self.server_count.saturating_sub(1)).max(1) as f64;
        out.push(unit(raw[3] / id_span));
        out.push(unit(raw[4]));
        for feature in &raw[5..8] {
            out.push(unit(feature / self.expected_total_tasks.max(1.0)));
        }
        out.push(unit(raw[8] / self.active_man_cap.max(1.0)));
        for load in &raw[FIXED_FEATURES..] {
            out.push(unit(load / 100.0));
        }
        out
    }
}

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AgentConfig {
    pub discount: f64,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    /// Target network refresh interval, in training steps.
    pub target_sync_period: u64,
    pub replay_capacity: usize,
    pub epsilon_initial: f64,
    /// Multiplicative epsilon decay applied per episode.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    /// Width of the two hidden layers.
    pub hidden_width: usize,
    /// Global-norm gradient clip; `None` disables clipping.
    pub gradient_clip: Option<f64>,
    /// Average the minibatch gradient instead of summing it.
    pub average_gradients: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            discount: 0.8,
            learning_rate: 0.0001,
            minibatch_size: 4,
            target_sync_period: 10,
            replay_capacity: 1_000_000,
            epsilon_initial: 1.0,
            epsilon_decay: 0.99,
            epsilon_floor: 0.1,
            hidden_width: 128,
            gradient_clip: Some(10.0),
            average_gradients: true,
        }
    }
}

/// Why the agent could not act or train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentError {
    /// The replay buffer holds fewer transitions than one minibatch.
    InsufficientExperience { have: usize, need: usize },
    Net(NnError),
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::InsufficientExperience { have, need } => {
                write!(f, "replay holds {have} transitions, need {need}")
            }
            AgentError::Net(e) => write!(f, "{e}"),
        }
    }
}

impl From<NnError> for AgentError {
    fn from(e: NnError) -> Self {
        AgentError::Net(e)
    }
}

/// Index of the maximal Q-value; ties break to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (idx, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = idx;
        }
    }
    best
}

/// Double-DQN training target (see module docs).
pub fn ddqn_target(
    online: &DenseNetwork,
    target: &DenseNetwork,
    reward: f64,
    next_state: &[f64],
    discount: f64,
    is_done: bool,
) -> Result<f64, NnError> {
    if is_done {
        return Ok(reward);
    }
    let mut ws = Workspace::default();
    let selected = argmax(online.forward(next_state, &mut ws)?);
    let evaluated = target.forward(next_state, &mut ws)?[selected];
    Ok(reward + discount * evaluated)
}

/// Plain DQN training target: the target network both selects and evaluates.
pub fn dqn_target(
    target: &DenseNetwork,
    reward: f64,
    next_state: &[f64],
    discount: f64,
    is_done: bool,
) -> Result<f64, NnError> {
    if is_done {
        return Ok(reward);
    }
    let mut ws = Workspace::default();
    let q = target.forward(next_state, &mut ws)?;
    Ok(reward + discount * q[argmax(q)])
}

/// The learning orchestrator.
pub struct DdqnAgent {
    config: AgentConfig,
    normalizer: Normalizer,
    online: DenseNetwork,
    target: DenseNetwork,
    replay: ReplayBuffer,
    epsilon: EpsilonSchedule,
    train_steps: u64,
    ws: Workspace,
    grads: Gradients,
}

impl DdqnAgent {
    /// Fresh agent for `server_count` edge servers: a `9+N -> h -> h -> N+1`
    /// network initialised from the given stream, with the target network
    /// starting as an exact copy.
    pub fn new(
        server_count: usize,
        normalizer: Normalizer,
        config: AgentConfig,
        init_rng: &mut RngStream,
    ) -> Self {
        let dims = [
            FIXED_FEATURES + server_count,
            config.hidden_width,
            config.hidden_width,
            server_count + 1,
        ];
        let online = DenseNetwork::init(&dims, init_rng);
        Self::with_network(online, normalizer, config)
    }

    /// Rebuild an agent around an existing online network (checkpoint
    /// restore). The network must map `9+N` features to `N+1` actions.
    pub fn from_network(
        online: DenseNetwork,
        normalizer: Normalizer,
        config: AgentConfig,
    ) -> Result<Self, NnError> {
        let expect_out = online.input_dim() - FIXED_FEATURES + 1;
        if online.input_dim() < FIXED_FEATURES + 1
            || online.output_dim() != expect_out
            || normalizer.server_count + FIXED_FEATURES != online.input_dim()
        {
            return Err(NnError::ArchitectureMismatch);
        }
        Ok(Self::with_network(online, normalizer, config))
    }

    fn with_network(online: DenseNetwork, normalizer: Normalizer, config: AgentConfig) -> Self {
        let target = online.clone();
        let grads = Gradients::zeroed_like(&online);
        DdqnAgent {
            replay: ReplayBuffer::new(config.replay_capacity),
            epsilon: EpsilonSchedule::new(
                config.epsilon_initial,
                config.epsilon_decay,
                config.epsilon_floor,
            ),
            train_steps: 0,
            ws: Workspace::default(),
            grads,
            online,
            target,
            normalizer,
            config,
        }
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.value()
    }

    pub fn set_epsilon(&mut self, value: f64) {
        self.epsilon.set_value(value);
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    /// Read access to the stored transitions (inspection and audits).
    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn online_network(&self) -> &DenseNetwork {
        &self.online
    }

    fn action_count(&self) -> usize {
        self.online.output_dim()
    }

    /// Greedy action under the online network; ties break to the lowest
    /// index.
    pub fn greedy_action(&mut self, normalized_state: &[f64]) -> Result<Action, NnError> {
        let q = self.online.forward(normalized_state, &mut self.ws)?;
        Ok(Action(argmax(q)))
    }

    /// Epsilon-greedy action: with probability epsilon a uniformly random
    /// placement, otherwise the greedy one. A zero epsilon consumes no
    /// randomness at all.
    pub fn act(
        &mut self,
        normalized_state: &[f64],
        rng: &mut RngStream,
    ) -> Result<Action, NnError> {
        let eps = self.epsilon.value();
        if eps > 0.0 && rng.bernoulli(eps) {
            return Ok(Action(rng.index(self.action_count())));
        }
        self.greedy_action(normalized_state)
    }

    /// Store a completed transition for replay.
    pub fn observe(&mut self, transition: Transition) {
        self.replay.push(transition);
    }

    /// One training step: sample a minibatch, regress every sampled
    /// `Q(s, a)` toward its double-DQN target, take one SGD step, and sync
    /// the target network when the step counter hits the period. Returns the
    /// minibatch's mean absolute temporal-difference error.
    pub fn train_step(&mut self, rng: &mut RngStream) -> Result<f64, AgentError> {
        let k = self.config.minibatch_size;
        if self.replay.len() < k {
            return Err(AgentError::InsufficientExperience {
                have: self.replay.len(),
                need: k,
            });
        }
        self.grads.zero();
        let mut abs_td_sum = 0.0;
        for _ in 0..k {
            let sample = &self.replay.items[rng.index(self.replay.items.len())];
            let y = ddqn_target(
                &self.online,
                &self.target,
                sample.reward,
                &sample.next_state,
                self.config.discount,
                sample.is_done,
            )?;
            let td = self
                .online
                .backward(&sample.state, sample.action, y, &mut self.ws, &mut self.grads)?;
            abs_td_sum += td.abs();
        }
        if self.config.average_gradients {
            self.grads.scale(1.0 / k as f64);
        }
        self.online
            .apply_gradients(&self.grads, self.config.learning_rate, self.config.gradient_clip);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.config.target_sync_period) {
            self.target
                .copy_parameters_from(&self.online)
                .expect("online and target networks always share an architecture");
        }
        Ok(abs_td_sum / k as f64)
    }

    /// Episode boundary: decay exploration.
    pub fn end_episode(&mut self) {
        self.epsilon.end_episode();
    }
}
