//! Learning agents and their shared apparatus: replay memory, the
//! epsilon-greedy schedule, the open-loop heuristic policy, target
//! networks, and the per-episode training loop they all share.
//!
//! Two learners are provided over the same single-hidden-layer network
//! shape: [`QNetworkAgent`] takes stochastic-gradient steps on the
//! temporal-difference error, [`EqlmAgent`] replaces gradient descent with
//! incremental regularized least-squares solves. [`HeuristicAgent`] is the
//! open-loop baseline used to calibrate both.

mod eqlm;
mod qnet;
mod replay;

pub use eqlm::EqlmAgent;
pub use qnet::QNetworkAgent;
pub use replay::ReplayMemory;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cartpole::CartPoleEnv;
use crate::elm::SlfnCheckpoint;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::LearningCurve;

/// Observation dimension of the task.
pub const STATE_DIM: usize = 4;
/// Number of discrete actions.
pub const N_ACTIONS: usize = 2;

/// Velocity scale used when mapping observations onto the network's input
/// box; positions and angles are scaled by their termination limits.
/// Cart and pole speeds rarely exceed this magnitude in practice.
pub const VELOCITY_SCALE: f64 = 3.0;

/// Observation as the networks see it: each component divided by its
/// characteristic range, so the position and angle (whose raw magnitudes
/// differ by an order of magnitude) carry comparable weight in the fixed
/// random hidden layer.
pub fn net_input(state: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    [
        state[0] / crate::cartpole::X_LIMIT,
        state[1] / VELOCITY_SCALE,
        state[2] / crate::cartpole::THETA_LIMIT,
        state[3] / VELOCITY_SCALE,
    ]
}

/// One experience tuple (s, a, r, s', terminal).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: usize,
    pub reward: f64,
    pub next_state: [f64; STATE_DIM],
    pub terminal: bool,
}

/// Hyperparameters shared by every agent kind. `alpha` only applies to the
/// gradient-descent agent and `gamma_bar` only to the least-squares agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Learning rate (Q-network only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Regularization parameter (EQLM only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    /// Hidden node count.
    pub n_hidden: usize,
    /// Initial exploration probability.
    pub eps_i: f64,
    /// Final exploration probability.
    pub eps_f: f64,
    /// Episodes over which exploration anneals linearly.
    pub n_eps: usize,
    /// Discount factor.
    pub gamma: f64,
    /// Minibatch size.
    pub k: usize,
    /// Target network sync period in time steps.
    pub c_target: usize,
    /// Replay memory capacity.
    pub n_mem: usize,
    /// Initial episodes driven by the open-loop heuristic (0 disables it).
    pub n_h: usize,
    /// Episodes per training run.
    pub n_ep: usize,
}

impl AgentConfig {
    /// Tuned cart-pole settings for the gradient-descent baseline.
    pub fn qnet_cartpole() -> Self {
        AgentConfig {
            alpha: Some(0.0065),
            gamma_bar: None,
            n_hidden: 29,
            eps_i: 0.670,
            eps_f: 0.0,
            n_eps: 400,
            gamma: 0.99,
            k: 26,
            c_target: 70,
            n_mem: 10_000,
            n_h: 0,
            n_ep: 600,
        }
    }

    /// Tuned cart-pole settings for the least-squares agent.
    pub fn eqlm_cartpole() -> Self {
        AgentConfig {
            alpha: None,
            gamma_bar: Some(0.3),
            n_hidden: 25,
            eps_i: 0.559,
            eps_f: 0.0,
            n_eps: 360,
            gamma: 0.93,
            k: 2,
            c_target: 48,
            n_mem: 10_000,
            n_h: 5,
            n_ep: 600,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |name: &'static str, reason: String| Error::InvalidParameter { name, reason };
        if !(0.0..=1.0).contains(&self.eps_f) || !self.eps_f.is_finite() {
            return Err(invalid("eps_f", format!("must be in [0, 1], got {}", self.eps_f)));
        }
        if !(self.eps_f..=1.0).contains(&self.eps_i) || !self.eps_i.is_finite() {
            return Err(invalid(
                "eps_i",
                format!("must satisfy eps_f <= eps_i <= 1, got {}", self.eps_i),
            ));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("gamma", format!("must be in (0, 1], got {}", self.gamma)));
        }
        if self.k < 1 {
            return Err(invalid("k", "minibatch size must be >= 1".to_string()));
        }
        if self.c_target < 1 {
            return Err(invalid("c_target", "sync period must be >= 1".to_string()));
        }
        if self.n_hidden < 1 {
            return Err(invalid("n_hidden", "need at least one hidden node".to_string()));
        }
        if self.n_mem < self.k {
            return Err(invalid(
                "n_mem",
                format!("memory capacity {} cannot hold a minibatch of {}", self.n_mem, self.k),
            ));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(invalid("alpha", format!("must be positive, got {alpha}")));
            }
        }
        if let Some(gamma_bar) = self.gamma_bar {
            if !(gamma_bar.is_finite() && gamma_bar > 0.0) {
                return Err(invalid("gamma_bar", format!("must be positive, got {gamma_bar}")));
            }
        }
        Ok(())
    }
}

/// Step counters shared by all agents: total steps taken, steps since the
/// last target sync, and how many syncs have happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepClock {
    pub global_step: u64,
    pub steps_since_sync: u64,
    pub sync_count: u64,
}

/// Common agent surface consumed by the training loop. `q_policy` reads
/// the live network, `q_target` the lagged copy used for bootstrap targets.
pub trait Agent {
    fn config(&self) -> &AgentConfig;
    fn memory(&self) -> &ReplayMemory;
    fn memory_mut(&mut self) -> &mut ReplayMemory;
    fn clock(&self) -> &StepClock;
    fn clock_mut(&mut self) -> &mut StepClock;
    fn q_policy(&self, state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS];
    fn q_target(&self, state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS];
    fn update(&mut self, minibatch: &[Transition]) -> Result<()>;

    /// Copies the live parameters into the target network.
    fn copy_target(&mut self);

    /// Whether this agent performs replay updates at all.
    fn learns(&self) -> bool {
        true
    }

    /// Whether episode `episode_index` (0-based) is driven by the open-loop
    /// heuristic. The default gives exactly `n_h` heuristic episodes.
    fn uses_heuristic(&self, episode_index: usize) -> bool {
        episode_index < self.config().n_h
    }

    /// Target sync: copy parameters and reset the sync counter.
    fn sync_target(&mut self) {
        self.copy_target();
        let clock = self.clock_mut();
        clock.steps_since_sync = 0;
        clock.sync_count += 1;
    }

    /// Advances the step counters; true when a target sync is due.
    fn record_step(&mut self) -> bool {
        let c = self.config().c_target as u64;
        let clock = self.clock_mut();
        clock.global_step += 1;
        clock.steps_since_sync += 1;
        clock.steps_since_sync >= c
    }
}

/// Exploration probability before episode `n`: linear anneal from `eps_i`
/// to `eps_f` over `n_eps` episodes, then constant at `eps_f`.
pub fn epsilon_at(episode: usize, cfg: &AgentConfig) -> f64 {
    if episode < cfg.n_eps {
        cfg.eps_i - (episode as f64 / cfg.n_eps as f64) * (cfg.eps_i - cfg.eps_f)
    } else {
        cfg.eps_f
    }
}

/// Open-loop heuristic: alternate the two actions every time step.
pub fn heuristic_action(t: usize) -> usize {
    t % 2
}

/// Greedy argmax with ties broken toward the lower action index.
pub fn greedy_action(q: &[f64; N_ACTIONS]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action selection from the live network.
pub fn select_action<A: Agent>(
    agent: &A,
    state: &[f64; STATE_DIM],
    epsilon: f64,
    rng: &mut impl Rng,
) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..N_ACTIONS)
    } else {
        greedy_action(&agent.q_policy(state))
    }
}

/// Builds the k x 2 target matrix for a minibatch. Row j starts as the live
/// network's prediction for both actions of state s_j; the entry of the
/// taken action is then overwritten with r_j for terminal transitions, or
/// r_j + gamma * max_a Q_target(s_{j+1}, a) otherwise.
pub fn compute_targets<A: Agent>(agent: &A, minibatch: &[Transition]) -> Result<Matrix> {
    if minibatch.is_empty() {
        return Err(Error::InvalidInput("empty minibatch".to_string()));
    }
    let gamma = agent.config().gamma;
    let mut data = Vec::with_capacity(minibatch.len() * N_ACTIONS);
    for tr in minibatch {
        let mut row = agent.q_policy(&tr.state);
        row[tr.action] = if tr.terminal {
            tr.reward
        } else {
            let q_next = agent.q_target(&tr.next_state);
            tr.reward + gamma * q_next[0].max(q_next[1])
        };
        data.extend_from_slice(&row);
    }
    Matrix::from_vec(minibatch.len(), N_ACTIONS, data)
}

/// Plays one episode and returns its total reward.
///
/// Actions come from the heuristic during the heuristic phase and from the
/// epsilon-greedy policy otherwise. After every step the transition is
/// stored, a duplicate-free minibatch of k experiences is drawn and applied
/// (once the memory holds at least k), and the target network is synced
/// every `c_target` global steps.
pub fn run_episode<A: Agent>(
    agent: &mut A,
    env: &mut CartPoleEnv,
    episode_index: usize,
    env_rng: &mut impl Rng,
    policy_rng: &mut impl Rng,
) -> Result<f64> {
    let mut state = env.reset(env_rng).observation();
    let heuristic = agent.uses_heuristic(episode_index);
    let epsilon = epsilon_at(episode_index, agent.config());
    let mut total = 0.0;
    let mut t = 0;
    loop {
        let action = if heuristic {
            heuristic_action(t)
        } else {
            select_action(agent, &state, epsilon, policy_rng)
        };
        let outcome = env.step(action)?;
        total += outcome.reward;
        let next_state = outcome.state.observation();
        agent.memory_mut().push(Transition {
            state,
            action,
            reward: outcome.reward,
            next_state,
            terminal: outcome.terminal,
        });

        let k = agent.config().k;
        if agent.learns() && agent.memory().len() >= k {
            let minibatch = agent.memory().sample(k, policy_rng);
            agent.update(&minibatch)?;
        }
        if agent.record_step() {
            agent.sync_target();
        }

        state = next_state;
        t += 1;
        if outcome.terminal {
            return Ok(total);
        }
    }
}

/// Runs `n_ep` episodes and returns the learning curve of per-episode
/// returns.
pub fn train<A: Agent>(
    agent: &mut A,
    env: &mut CartPoleEnv,
    env_rng: &mut impl Rng,
    policy_rng: &mut impl Rng,
) -> Result<LearningCurve> {
    let n_ep = agent.config().n_ep;
    let mut returns = Vec::with_capacity(n_ep);
    for episode in 0..n_ep {
        returns.push(run_episode(agent, env, episode, env_rng, policy_rng)?);
    }
    LearningCurve::new(returns)
}

/// Agent that always follows the open-loop heuristic and never updates;
/// the calibration baseline for the learning agents.
#[derive(Debug, Clone)]
pub struct HeuristicAgent {
    config: AgentConfig,
    memory: ReplayMemory,
    clock: StepClock,
}

impl HeuristicAgent {
    pub fn new(config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let memory = ReplayMemory::new(config.n_mem);
        Ok(HeuristicAgent {
            config,
            memory,
            clock: StepClock::default(),
        })
    }
}

impl Agent for HeuristicAgent {
    fn config(&self) -> &AgentConfig {
        &self.config
    }

    fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    fn memory_mut(&mut self) -> &mut ReplayMemory {
        &mut self.memory
    }

    fn clock(&self) -> &StepClock {
        &self.clock
    }

    fn clock_mut(&mut self) -> &mut StepClock {
        &mut self.clock
    }

    fn q_policy(&self, _state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS] {
        [0.0; N_ACTIONS]
    }

    fn q_target(&self, _state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS] {
        [0.0; N_ACTIONS]
    }

    fn update(&mut self, _minibatch: &[Transition]) -> Result<()> {
        Ok(())
    }

    fn copy_target(&mut self) {}

    fn learns(&self) -> bool {
        false
    }

    fn uses_heuristic(&self, _episode_index: usize) -> bool {
        true
    }
}

/// Saved agent: the network checkpoint plus the configuration echo and
/// step counters. Loading restores the learned network for evaluation;
/// replay memory and the in-flight recursion state are not captured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    /// Agent kind tag: "qnet" or "eqlm".
    pub agent: String,
    pub config: AgentConfig,
    pub global_step: u64,
    pub steps_since_sync: u64,
    pub sync_count: u64,
    pub network: SlfnCheckpoint,
}

impl AgentCheckpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("checkpoint parse: {e}")))
    }
}
