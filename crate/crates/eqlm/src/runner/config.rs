//! Experiment configuration: one flat key-value file per campaign.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentConfig;
use crate::error::Error;

use super::RunnerError;

/// Which agent a campaign trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "qnet")]
    QNet,
    #[serde(rename = "eqlm")]
    Eqlm,
    #[serde(rename = "heuristic-only")]
    HeuristicOnly,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AgentKind::QNet => "qnet",
            AgentKind::Eqlm => "eqlm",
            AgentKind::HeuristicOnly => "heuristic-only",
        };
        f.write_str(name)
    }
}

/// Full campaign description. The TOML config file mirrors these field
/// names exactly, one key per line; `--runs`, `--seed` and `--out` on the
/// command line override their file counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    pub n_hidden: usize,
    pub eps_i: f64,
    pub eps_f: f64,
    pub n_eps: usize,
    pub gamma: f64,
    pub k: usize,
    pub c_target: usize,
    pub n_mem: usize,
    pub n_h: usize,
    pub n_ep: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Tuned Q-network campaign (50 runs of 600 episodes).
    pub fn qnet_cartpole() -> Self {
        Self::from_agent_config(AgentKind::QNet, AgentConfig::qnet_cartpole())
    }

    /// Tuned EQLM campaign (50 runs of 600 episodes).
    pub fn eqlm_cartpole() -> Self {
        Self::from_agent_config(AgentKind::Eqlm, AgentConfig::eqlm_cartpole())
    }

    fn from_agent_config(agent: AgentKind, cfg: AgentConfig) -> Self {
        ExperimentConfig {
            agent,
            alpha: cfg.alpha,
            gamma_bar: cfg.gamma_bar,
            n_hidden: cfg.n_hidden,
            eps_i: cfg.eps_i,
            eps_f: cfg.eps_f,
            n_eps: cfg.n_eps,
            gamma: cfg.gamma,
            k: cfg.k,
            c_target: cfg.c_target,
            n_mem: cfg.n_mem,
            n_h: cfg.n_h,
            n_ep: cfg.n_ep,
            n_runs: 50,
            base_seed: 2020,
            out: None,
        }
    }

    /// The per-agent hyperparameter block of this campaign.
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            alpha: self.alpha,
            gamma_bar: self.gamma_bar,
            n_hidden: self.n_hidden,
            eps_i: self.eps_i,
            eps_f: self.eps_f,
            n_eps: self.n_eps,
            gamma: self.gamma,
            k: self.k,
            c_target: self.c_target,
            n_mem: self.n_mem,
            n_h: self.n_h,
            n_ep: self.n_ep,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RunnerError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| RunnerError::Config {
            // The TOML error message names the offending key.
            field: "config".to_string(),
            reason: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let config_err = |field: &str, reason: String| RunnerError::Config {
            field: field.to_string(),
            reason,
        };
        if self.n_runs < 1 {
            return Err(config_err("n_runs", "need at least one run".to_string()));
        }
        if self.n_ep < 1 {
            return Err(config_err("n_ep", "need at least one episode per run".to_string()));
        }
        match self.agent {
            AgentKind::QNet if self.alpha.is_none() => {
                return Err(config_err("alpha", "required for agent = \"qnet\"".to_string()));
            }
            AgentKind::Eqlm if self.gamma_bar.is_none() => {
                return Err(config_err("gamma_bar", "required for agent = \"eqlm\"".to_string()));
            }
            _ => {}
        }
        self.agent_config().validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(name, reason),
            other => config_err("config", other.to_string()),
        })
    }
}
