//! Q-learning agent whose network updates are incremental regularized
//! least-squares solves instead of gradient steps.
//!
//! Every update builds the minibatch's target matrix the same way the
//! gradient agent does, then feeds it to the LS-IELM recursion: the very
//! first call initializes the recursion, all later calls apply the rank-k
//! update rules. The target network shares the fixed hidden layer and
//! snapshots only the output weights.
//!
//! Two stabilizing choices around the raw recursion: observations enter
//! the network range-normalized with input weights wide enough to spread
//! the sigmoid features over the state box, and every target-network sync
//! restores the gain matrix to its post-initialization value. Without the
//! re-arm the gain decays like 1/t and the recursion anchors on stale
//! bootstrap targets long before the policy becomes competent.

use rand::Rng;

use crate::elm::{LsielmState, Slfn, WeightInit};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::{
    compute_targets, net_input, Agent, AgentCheckpoint, AgentConfig, ReplayMemory, StepClock,
    Transition, N_ACTIONS, STATE_DIM,
};

/// Input weight/bias range over the normalized observation box.
const INPUT_WEIGHT_SCALE: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct EqlmAgent {
    lsielm: LsielmState,
    /// Output-weight snapshot used for bootstrap targets.
    target_beta: Matrix,
    /// Gain matrix snapshot taken right after initialization, restored at
    /// every target sync.
    init_gain: Option<Matrix>,
    config: AgentConfig,
    memory: ReplayMemory,
    clock: StepClock,
}

impl EqlmAgent {
    pub fn new(config: AgentConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let net = Slfn::random(
            STATE_DIM,
            config.n_hidden,
            N_ACTIONS,
            WeightInit::Uniform { scale: INPUT_WEIGHT_SCALE },
            rng,
        )?;
        Self::from_network(net, config)
    }

    /// Builds the agent around an explicit network; used when loading
    /// checkpoints and by tests that need controlled weights.
    pub fn from_network(net: Slfn, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let gamma_bar = config.gamma_bar.ok_or(Error::InvalidParameter {
            name: "gamma_bar",
            reason: "the EQLM agent needs a regularization parameter".to_string(),
        })?;
        if net.input_dim() != STATE_DIM || net.output_dim() != N_ACTIONS {
            return Err(Error::shape(
                "EqlmAgent::from_network",
                format!(
                    "network is {}-in/{}-out, task needs {STATE_DIM}-in/{N_ACTIONS}-out",
                    net.input_dim(),
                    net.output_dim()
                ),
            ));
        }
        let target_beta = net.output_weights().clone();
        let memory = ReplayMemory::new(config.n_mem);
        Ok(EqlmAgent {
            lsielm: LsielmState::new(net, gamma_bar)?,
            target_beta,
            init_gain: None,
            config,
            memory,
            clock: StepClock::default(),
        })
    }

    pub fn lsielm(&self) -> &LsielmState {
        &self.lsielm
    }

    pub fn target_beta(&self) -> &Matrix {
        &self.target_beta
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            agent: "eqlm".to_string(),
            config: self.config.clone(),
            global_step: self.clock.global_step,
            steps_since_sync: self.clock.steps_since_sync,
            sync_count: self.clock.sync_count,
            network: self.lsielm.net().to_checkpoint(Some(self.lsielm.gamma_bar())),
        }
    }

    /// Restores an agent for evaluation. The learned network is recovered
    /// exactly; the least-squares recursion restarts on the next update.
    pub fn from_checkpoint(cp: &AgentCheckpoint) -> Result<Self> {
        if cp.agent != "eqlm" {
            return Err(Error::InvalidInput(format!(
                "checkpoint is for agent kind `{}`, expected `eqlm`",
                cp.agent
            )));
        }
        let net = Slfn::from_checkpoint(&cp.network)?;
        let mut config = cp.config.clone();
        if let Some(gamma_bar) = cp.network.gamma_bar {
            config.gamma_bar = Some(gamma_bar);
        }
        let mut agent = Self::from_network(net, config)?;
        agent.clock = StepClock {
            global_step: cp.global_step,
            steps_since_sync: cp.steps_since_sync,
            sync_count: cp.sync_count,
        };
        Ok(agent)
    }
}

impl Agent for EqlmAgent {
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
            .lsielm
            .net()
            .forward(&net_input(state))
            .expect("dims fixed at construction");
        [out[0], out[1]]
    }

    fn q_target(&self, state: &[f64; STATE_DIM]) -> [f64; N_ACTIONS] {
        let out = self
            .lsielm
            .net()
            .forward_with_beta(&net_input(state), &self.target_beta)
            .expect("dims fixed at construction");
        [out[0], out[1]]
    }

    fn update(&mut self, minibatch: &[Transition]) -> Result<()> {
        let targets = compute_targets(&*self, minibatch)?;
        let mut states = Vec::with_capacity(minibatch.len() * STATE_DIM);
        for tr in minibatch {
            states.extend_from_slice(&net_input(&tr.state));
        }
        let inputs = Matrix::from_vec(minibatch.len(), STATE_DIM, states)?;
        if self.lsielm.is_initialized() {
            self.lsielm.update(&inputs, &targets)
        } else {
            self.lsielm.init(&inputs, &targets)?;
            self.init_gain = Some(self.lsielm.a_dagger().clone());
            Ok(())
        }
    }

    fn copy_target(&mut self) {
        self.target_beta = self.lsielm.net().output_weights().clone();
        if let Some(gain) = &self.init_gain {
            self.lsielm.restore_a_dagger(gain.clone());
        }
    }
}
