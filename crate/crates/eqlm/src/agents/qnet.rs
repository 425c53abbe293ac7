//! Gradient-descent baseline: a single-hidden-layer Q-network trained by
//! plain SGD on the minibatch mean-squared temporal-difference error, with
//! a full-copy target network.

use rand::Rng;

use crate::elm::{Slfn, WeightInit};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::{
    compute_targets, net_input, Agent, AgentCheckpoint, AgentConfig, ReplayMemory, StepClock,
    Transition, N_ACTIONS, STATE_DIM,
};

/// Q-learning agent whose network is trained by backpropagation. All three
/// parameter blocks (input weights, biases, output weights) are trainable;
/// the target network is a full parameter snapshot.
#[derive(Debug, Clone)]
pub struct QNetworkAgent {
    policy_net: Slfn,
    target_net: Slfn,
    alpha: f64,
    config: AgentConfig,
    memory: ReplayMemory,
    clock: StepClock,
}

impl QNetworkAgent {
    pub fn new(config: AgentConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let alpha = config.alpha.ok_or(Error::InvalidParameter {
            name: "alpha",
            reason: "the Q-network agent needs a learning rate".to_string(),
        })?;
        let policy_net = Slfn::random(STATE_DIM, config.n_hidden, N_ACTIONS, WeightInit::FanInScaled, rng)?;
        Self::from_network(policy_net, alpha, config)
    }

    /// Builds the agent around an explicit network; used when loading
    /// checkpoints and by tests that need controlled weights.
    pub fn from_network(policy_net: Slfn, alpha: f64, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        if policy_net.input_dim() != STATE_DIM || policy_net.output_dim() != N_ACTIONS {
            return Err(Error::shape(
                "QNetworkAgent::from_network",
                format!(
                    "network is {}-in/{}-out, task needs {STATE_DIM}-in/{N_ACTIONS}-out",
                    policy_net.input_dim(),
                    policy_net.output_dim()
                ),
            ));
        }
        let target_net = policy_net.clone();
        let memory = ReplayMemory::new(config.n_mem);
        Ok(QNetworkAgent {
            policy_net,
            target_net,
            alpha,
            config,
            memory,
            clock: StepClock::default(),
        })
    }

    pub fn policy_net(&self) -> &Slfn {
        &self.policy_net
    }

    pub fn target_net(&self) -> &Slfn {
        &self.target_net
    }

    /// One SGD step on the TD error of each transition in the minibatch:
    /// the per-transition gradients of (1/2) e_j^2 are accumulated and
    /// applied together, with the targets held fixed.
    fn gradient_step(&mut self, minibatch: &[Transition], targets: &Matrix) -> Result<()> {
        let n_hidden = self.policy_net.hidden_count();
        let mut g_w = vec![0.0; n_hidden * STATE_DIM];
        let mut g_b = vec![0.0; n_hidden];
        let mut g_beta = vec![0.0; n_hidden * N_ACTIONS];

        for (j, tr) in minibatch.iter().enumerate() {
            let input = net_input(&tr.state);
            let h = self.policy_net.hidden_row(&input)?;
            let a = tr.action;
            let q: f64 = (0..n_hidden)
                .map(|i| h[i] * self.policy_net.output_weights.get(i, a))
                .sum();
            let error = q - targets.get(j, a);
            if error == 0.0 {
                continue;
            }
            for (i, &hi) in h.iter().enumerate() {
                g_beta[i * N_ACTIONS + a] += error * hi;
                let dz = error * self.policy_net.output_weights.get(i, a) * hi * (1.0 - hi);
                g_b[i] += dz;
                for (d, &x) in input.iter().enumerate() {
                    g_w[i * STATE_DIM + d] += dz * x;
                }
            }
        }

        let alpha = self.alpha;
        let w = &self.policy_net.input_weights;
        let new_w = Matrix::from_fn(n_hidden, STATE_DIM, |i, d| {
            w.get(i, d) - alpha * g_w[i * STATE_DIM + d]
        })?;
        let beta = &self.policy_net.output_weights;
        let new_beta = Matrix::from_fn(n_hidden, N_ACTIONS, |i, a| {
            beta.get(i, a) - alpha * g_beta[i * N_ACTIONS + a]
        })?;
        let new_b: Vec<f64> = self
            .policy_net
            .biases
            .iter()
            .zip(&g_b)
            .map(|(b, g)| b - alpha * g)
            .collect();
        if !new_b.iter().all(|b| b.is_finite()) {
            return Err(Error::NonFinite("qnet gradient step"));
        }

        self.policy_net.input_weights = new_w;
        self.policy_net.biases = new_b;
        self.policy_net.output_weights = new_beta;
        Ok(())
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            agent: "qnet".to_string(),
            config: self.config.clone(),
            global_step: self.clock.global_step,
            steps_since_sync: self.clock.steps_since_sync,
            sync_count: self.clock.sync_count,
            network: self.policy_net.to_checkpoint(None),
        }
    }

    /// Restores an agent for evaluation: the saved network becomes both
    /// policy and target; replay memory starts empty.
    pub fn from_checkpoint(cp: &AgentCheckpoint) -> Result<Self> {
        if cp.agent != "qnet" {
            return Err(Error::InvalidInput(format!(
                "checkpoint is for agent kind `{}`, expected `qnet`",
                cp.agent
            )));
        }
        let alpha = cp.config.alpha.ok_or(Error::InvalidParameter {
            name: "alpha",
            reason: "missing from checkpoint config".to_string(),
        })?;
        let net = Slfn::from_checkpoint(&cp.network)?;
        let mut agent = Self::from_network(net, alpha, cp.config.clone())?;
        agent.clock = StepClock {
            global_step: cp.global_step,
            steps_since_sync: cp.steps_since_sync,
            sync_count: cp.sync_count,
        };
        Ok(agent)
    }
}

impl Agent for QNetworkAgent {
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

    fn q_policy(&self, state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS] {
        let out = self
            .policy_net
            .forward(&net_input(state))
            .expect("dims fixed at construction");
        [out[0], out[1]]
    }

    fn q_target(&self, state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS] {
        let out = self
            .target_net
            .forward(&net_input(state))
            .expect("dims fixed at construction");
        [out[0], out[1]]
    }

    fn update(&mut self, minibatch: &[Transition]) -> Result<()> {
        let targets = compute_targets(&*self, minibatch)?;
        self.gradient_step(minibatch, &targets)
    }

    fn copy_target(&mut self) {
        self.target_net = self.policy_net.clone();
    }
}
