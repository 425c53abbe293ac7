//! Extreme Q-Learning Machine: Q-learning on the cart-pole task where the
//! network's output weights are solved by incremental regularized
//! least-squares (LS-IELM) instead of gradient descent, next to a plain
//! gradient-descent Q-network trained on the same architecture.
//!
//! Layout follows the pipeline: [`linalg`] supplies the dense matrix ops
//! and pseudoinverse, [`elm`] the single-hidden-layer network and its
//! least-squares solvers, [`cartpole`] the benchmark environment,
//! [`agents`] the two learners plus the shared training loop, [`metrics`]
//! the learning-curve statistics, and [`runner`] the seeded multi-run
//! campaign orchestration behind the CLI.

pub mod agents;
pub mod cartpole;
pub mod elm;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod runner;

pub use agents::{
    compute_targets, epsilon_at, greedy_action, heuristic_action, run_episode, select_action,
    train, Agent, AgentCheckpoint, AgentConfig, EqlmAgent, HeuristicAgent, QNetworkAgent,
    ReplayMemory, StepClock, Transition,
};
pub use cartpole::{CartPoleEnv, CartPoleState, StepOutcome};
pub use elm::{Activation, LsielmState, Slfn, SlfnCheckpoint, WeightInit};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{
    auc, final_mean, mean_ci, mean_ci_bootstrap, t_test, tuning_loss, LearningCurve,
    RunSetSummary, TTestResult,
};
pub use runner::{
    cmd_compare, cmd_train, cmd_tuning_loss, load_summary, run_campaign, AgentKind,
    CampaignSummary, CompareReport, ExperimentConfig, MetricComparison, RunArtifact, RunRecord,
    RunnerError,
};
