//! Experiment orchestration: seeded multi-run campaigns for each agent
//! kind, CSV/JSON artifact emission, campaign comparison, and the
//! hyperparameter tuning loss.
//!
//! Runs are embarrassingly parallel: run `i` is seeded by
//! `base_seed + i` alone, so parallel and serial execution produce
//! identical results.

mod config;

pub use config::{AgentKind, ExperimentConfig};

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{train, EqlmAgent, HeuristicAgent, QNetworkAgent};
use crate::cartpole::CartPoleEnv;
use crate::metrics::{auc, final_mean, t_test, LearningCurve, RunSetSummary, FINAL_WINDOW};
use crate::rng::run_rngs;

/// Decision threshold for the same-distribution verdict.
pub const P_THRESHOLD: f64 = 0.05;

/// Runner-level errors; `exit_code` gives the CLI category.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl RunnerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config { .. } => 2,
            RunnerError::Io(_) => 3,
            RunnerError::Input(_) => 4,
            RunnerError::Core(_) => 5,
        }
    }
}

/// Per-run result line of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub final_mean: f64,
    pub auc: f64,
}

/// Everything a campaign produced: the resolved config, one learning curve
/// and record per run, and the two campaign-level summaries.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub final_mean_window: usize,
    pub runs: Vec<RunRecord>,
    pub curves: Vec<LearningCurve>,
    pub final_mean_summary: RunSetSummary,
    pub auc_summary: RunSetSummary,
}

/// On-disk shape of `summary.json`. The curves live next to it as one CSV
/// per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub config: ExperimentConfig,
    pub final_mean_window: usize,
    pub final_mean: RunSetSummary,
    pub auc: RunSetSummary,
    pub runs: Vec<RunRecord>,
}

impl RunArtifact {
    pub fn summary(&self) -> CampaignSummary {
        CampaignSummary {
            config: self.config.clone(),
            final_mean_window: self.final_mean_window,
            final_mean: self.final_mean_summary,
            auc: self.auc_summary,
            runs: self.runs.clone(),
        }
    }
}

fn run_single(cfg: &ExperimentConfig, run_index: usize) -> Result<(LearningCurve, RunRecord), RunnerError> {
    let seed = cfg.base_seed.wrapping_add(run_index as u64);
    let (mut env_rng, mut net_rng, mut policy_rng) = run_rngs(seed);
    let mut env = CartPoleEnv::new();
    let agent_config = cfg.agent_config();
    let started = Instant::now();
    let curve = match cfg.agent {
        AgentKind::QNet => {
            let mut agent = QNetworkAgent::new(agent_config, &mut net_rng)?;
            train(&mut agent, &mut env, &mut env_rng, &mut policy_rng)?
        }
        AgentKind::Eqlm => {
            let mut agent = EqlmAgent::new(agent_config, &mut net_rng)?;
            train(&mut agent, &mut env, &mut env_rng, &mut policy_rng)?
        }
        AgentKind::HeuristicOnly => {
            let mut agent = HeuristicAgent::new(agent_config)?;
            train(&mut agent, &mut env, &mut env_rng, &mut policy_rng)?
        }
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    let window = cfg.n_ep.min(FINAL_WINDOW);
    let record = RunRecord {
        run_index,
        seed,
        wall_time_s,
        final_mean: final_mean(&curve, window)?,
        auc: auc(&curve)?,
    };
    Ok((curve, record))
}

fn summarize(values: &[f64]) -> Result<RunSetSummary, RunnerError> {
    if values.len() == 1 {
        return Ok(RunSetSummary {
            mean: values[0],
            ci_low: values[0],
            ci_high: values[0],
            std: 0.0,
            n_runs: 1,
        });
    }
    Ok(crate::metrics::mean_ci(values, 0.95)?)
}

/// Trains `n_runs` independent seeded runs (in parallel) and aggregates
/// them. Nothing is written to disk.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<RunArtifact, RunnerError> {
    cfg.validate()?;
    let results: Vec<Result<(LearningCurve, RunRecord), RunnerError>> =
        (0..cfg.n_runs).into_par_iter().map(|i| run_single(cfg, i)).collect();
    let mut curves = Vec::with_capacity(cfg.n_runs);
    let mut runs = Vec::with_capacity(cfg.n_runs);
    for result in results {
        let (curve, record) = result?;
        curves.push(curve);
        runs.push(record);
    }
    let final_means: Vec<f64> = runs.iter().map(|r| r.final_mean).collect();
    let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
    Ok(RunArtifact {
        final_mean_summary: summarize(&final_means)?,
        auc_summary: summarize(&aucs)?,
        final_mean_window: cfg.n_ep.min(FINAL_WINDOW),
        config: cfg.clone(),
        runs,
        curves,
    })
}

fn curve_file_name(run_index: usize) -> String {
    format!("run_{run_index:03}.csv")
}

fn write_artifact(artifact: &RunArtifact, dir: &Path) -> Result<(), RunnerError> {
    fs::create_dir_all(dir)?;
    for (record, curve) in artifact.runs.iter().zip(&artifact.curves) {
        let mut w = BufWriter::new(fs::File::create(dir.join(curve_file_name(record.run_index)))?);
        writeln!(w, "episode,return")?;
        for (episode, ret) in curve.returns().iter().enumerate() {
            writeln!(w, "{episode},{ret}")?;
        }
        w.flush()?;
    }
    let json = serde_json::to_string_pretty(&artifact.summary())
        .expect("summary serialization cannot fail");
    fs::write(dir.join("summary.json"), json)?;
    Ok(())
}

/// Runs a campaign and writes `run_NNN.csv` per run plus `summary.json`
/// into the output directory (from the config's `out` key unless
/// overridden upstream).
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<RunArtifact, RunnerError> {
    let out = cfg.out.clone().ok_or_else(|| RunnerError::Config {
        field: "out".to_string(),
        reason: "an output directory is required (config key `out` or --out)".to_string(),
    })?;
    let artifact = run_campaign(cfg)?;
    write_artifact(&artifact, &out)?;
    Ok(artifact)
}

/// Loads the summary of a previously written campaign.
pub fn load_summary(path: &Path) -> Result<CampaignSummary, RunnerError> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file)
        .map_err(|e| RunnerError::Input(format!("cannot read artifact {}: {e}", file.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunnerError::Input(format!("malformed artifact {}: {e}", file.display())))
}

/// One metric's side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub a: RunSetSummary,
    pub b: RunSetSummary,
    pub t: f64,
    pub p: f64,
    pub df: f64,
    /// "rejected" when p < the threshold, else "not rejected".
    pub verdict: String,
}

/// Two-campaign comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub artifact_a: PathBuf,
    pub artifact_b: PathBuf,
    pub p_threshold: f64,
    pub final_mean: MetricComparison,
    pub auc: MetricComparison,
}

fn compare_metric(name: &str, a: &[f64], b: &[f64]) -> Result<MetricComparison, RunnerError> {
    let test = t_test(a, b)?;
    let verdict = if test.p < P_THRESHOLD { "rejected" } else { "not rejected" };
    Ok(MetricComparison {
        metric: name.to_string(),
        a: summarize(a)?,
        b: summarize(b)?,
        t: test.t,
        p: test.p,
        df: test.df,
        verdict: verdict.to_string(),
    })
}

/// Welch-tests two stored campaigns on final-window reward and AUC, with a
/// same-distribution verdict per metric at `p < 0.05`.
pub fn cmd_compare(artifact_a: &Path, artifact_b: &Path) -> Result<CompareReport, RunnerError> {
    let a = load_summary(artifact_a)?;
    let b = load_summary(artifact_b)?;
    for (path, summary) in [(artifact_a, &a), (artifact_b, &b)] {
        if summary.runs.len() < 2 {
            return Err(RunnerError::Input(format!(
                "artifact {} has {} runs; compare needs at least 2",
                path.display(),
                summary.runs.len()
            )));
        }
    }
    let metric = |f: fn(&RunRecord) -> f64, s: &CampaignSummary| -> Vec<f64> {
        s.runs.iter().map(f).collect()
    };
    Ok(CompareReport {
        artifact_a: artifact_a.to_path_buf(),
        artifact_b: artifact_b.to_path_buf(),
        p_threshold: P_THRESHOLD,
        final_mean: compare_metric(
            "final_mean",
            &metric(|r| r.final_mean, &a),
            &metric(|r| r.final_mean, &b),
        )?,
        auc: compare_metric("auc", &metric(|r| r.auc, &a), &metric(|r| r.auc, &b))?,
    })
}

/// Hyperparameter evaluation: `n_runs` seeded runs of the given config,
/// reduced to the upper 95% confidence bound of the mean negated AUC.
pub fn cmd_tuning_loss(cfg: &ExperimentConfig, n_runs: usize) -> Result<f64, RunnerError> {
    let mut cfg = cfg.clone();
    cfg.n_runs = n_runs;
    let artifact = run_campaign(&cfg)?;
    Ok(crate::metrics::tuning_loss(&artifact.curves)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_eqlm_config(out: Option<PathBuf>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::eqlm_cartpole();
        cfg.n_runs = 2;
        cfg.n_ep = 5;
        cfg.base_seed = 11;
        cfg.out = out;
        cfg
    }

    #[test]
    fn bundled_default_configs_parse_to_the_shipped_values() {
        let qnet =
            ExperimentConfig::from_toml_str(include_str!("../../../../configs/qnet.toml")).unwrap();
        let mut want = ExperimentConfig::qnet_cartpole();
        want.out = qnet.out.clone();
        assert_eq!(qnet, want);

        let eqlm =
            ExperimentConfig::from_toml_str(include_str!("../../../../configs/eqlm.toml")).unwrap();
        let mut want = ExperimentConfig::eqlm_cartpole();
        want.out = eqlm.out.clone();
        assert_eq!(eqlm, want);
        assert_eq!(eqlm.gamma_bar, Some(0.3));
        assert_eq!(eqlm.k, 2);
        assert_eq!(qnet.k, 26);
        assert_eq!(qnet.c_target, 70);
    }

    #[test]
    fn unknown_and_invalid_config_keys_are_config_errors() {
        let err = ExperimentConfig::from_toml_str("agent = \"eqlm\"\nbogus = 1\n").unwrap_err();
        match &err {
            RunnerError::Config { reason, .. } => assert!(reason.contains("bogus"), "{reason}"),
            other => panic!("expected config error, got {other:?}"),
        }
        assert_eq!(err.exit_code(), 2);

        let mut cfg = tiny_eqlm_config(None);
        cfg.gamma = 1.5;
        match cfg.validate().unwrap_err() {
            RunnerError::Config { field, .. } => assert_eq!(field, "gamma"),
            other => panic!("expected config error, got {other:?}"),
        }

        let mut cfg = tiny_eqlm_config(None);
        cfg.gamma_bar = None;
        match cfg.validate().unwrap_err() {
            RunnerError::Config { field, .. } => assert_eq!(field, "gamma_bar"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn train_writes_deterministic_curve_csvs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        cmd_train(&tiny_eqlm_config(Some(dir_a.path().to_path_buf()))).unwrap();
        cmd_train(&tiny_eqlm_config(Some(dir_b.path().to_path_buf()))).unwrap();
        for run in 0..2 {
            let name = curve_file_name(run);
            let a = std::fs::read(dir_a.path().join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(&name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "{name} differs between reruns");
        }
        let text = std::fs::read_to_string(dir_a.path().join(curve_file_name(0))).unwrap();
        assert!(text.starts_with("episode,return\n0,"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn run_results_do_not_depend_on_n_runs() {
        let mut cfg = tiny_eqlm_config(None);
        cfg.n_runs = 4;
        let wide = run_campaign(&cfg).unwrap();
        cfg.n_runs = 1;
        let narrow = run_campaign(&cfg).unwrap();
        assert_eq!(wide.curves[0], narrow.curves[0]);
        assert_eq!(wide.runs[0].seed, narrow.runs[0].seed);
        assert_eq!(wide.runs[0].final_mean, narrow.runs[0].final_mean);
    }

    #[test]
    fn summary_echoes_a_config_that_reproduces_the_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = cmd_train(&tiny_eqlm_config(Some(dir.path().to_path_buf()))).unwrap();
        let summary = load_summary(dir.path()).unwrap();
        assert_eq!(summary.runs.len(), 2);

        let rerun = run_campaign(&summary.config).unwrap();
        assert_eq!(rerun.curves, artifact.curves);
        assert_eq!(
            rerun.runs.iter().map(|r| r.auc).collect::<Vec<_>>(),
            artifact.runs.iter().map(|r| r.auc).collect::<Vec<_>>()
        );
    }

    #[test]
    fn heuristic_only_campaign_matches_the_known_baseline() {
        let mut cfg = tiny_eqlm_config(None);
        cfg.agent = AgentKind::HeuristicOnly;
        cfg.n_runs = 2;
        cfg.n_ep = 100;
        let artifact = run_campaign(&cfg).unwrap();
        let mean = artifact.final_mean_summary.mean;
        assert!((29.0..=45.0).contains(&mean), "heuristic mean {mean}");
    }

    #[test]
    fn compare_with_self_does_not_reject() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_eqlm_config(Some(dir.path().to_path_buf()));
        cfg.agent = AgentKind::HeuristicOnly;
        cfg.n_ep = 10;
        cmd_train(&cfg).unwrap();
        let report = cmd_compare(dir.path(), dir.path()).unwrap();
        assert_eq!(report.final_mean.t, 0.0);
        assert_eq!(report.final_mean.p, 1.0);
        assert_eq!(report.final_mean.verdict, "not rejected");
        assert_eq!(report.auc.verdict, "not rejected");
    }

    #[test]
    fn compare_separates_extremely_different_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let write_fake = |name: &str, level: f64| -> PathBuf {
            let mut cfg = tiny_eqlm_config(None);
            cfg.n_runs = 5;
            let runs: Vec<RunRecord> = (0..5)
                .map(|i| RunRecord {
                    run_index: i,
                    seed: i as u64,
                    wall_time_s: 0.0,
                    final_mean: level + 0.01 * i as f64,
                    auc: (level + 0.01 * i as f64) * 10.0,
                })
                .collect();
            let summary = CampaignSummary {
                config: cfg,
                final_mean_window: 5,
                final_mean: summarize(&runs.iter().map(|r| r.final_mean).collect::<Vec<_>>()).unwrap(),
                auc: summarize(&runs.iter().map(|r| r.auc).collect::<Vec<_>>()).unwrap(),
                runs,
            };
            let path = dir.path().join(name);
            std::fs::write(&path, serde_json::to_string_pretty(&summary).unwrap()).unwrap();
            path
        };
        let a = write_fake("a.json", 200.0);
        let b = write_fake("b.json", 10.0);
        let report = cmd_compare(&a, &b).unwrap();
        assert!(report.final_mean.p < 1e-6, "p = {}", report.final_mean.p);
        assert_eq!(report.final_mean.verdict, "rejected");
        assert!(report.final_mean.t > 0.0);
    }

    #[test]
    fn compare_rejects_missing_or_short_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        let err = cmd_compare(&missing, &missing).unwrap_err();
        assert_eq!(err.exit_code(), 4);

        let mut cfg = tiny_eqlm_config(Some(dir.path().to_path_buf()));
        cfg.agent = AgentKind::HeuristicOnly;
        cfg.n_runs = 1;
        cmd_train(&cfg).unwrap();
        let err = cmd_compare(dir.path(), dir.path()).unwrap_err();
        assert!(matches!(err, RunnerError::Input(_)));
    }

    #[test]
    fn tuning_loss_is_deterministic_and_tracks_the_heuristic_value() {
        let mut cfg = tiny_eqlm_config(None);
        cfg.agent = AgentKind::HeuristicOnly;
        cfg.n_ep = 50;
        let a = cmd_tuning_loss(&cfg, 8).unwrap();
        let b = cmd_tuning_loss(&cfg, 8).unwrap();
        assert_eq!(a, b);
        // Loss is the upper CI bound of -auc; per-episode return sits near
        // the known alternating-policy baseline of 37.
        let per_episode = -a / cfg.n_ep as f64;
        assert!((29.0..=45.0).contains(&per_episode), "per-episode {per_episode}");
    }

    #[test]
    fn tuning_loss_improves_with_a_learning_config() {
        let mut tuned = tiny_eqlm_config(None);
        tuned.n_ep = 100;
        let mut random = tuned.clone();
        random.eps_i = 1.0;
        random.eps_f = 1.0;
        let tuned_loss = cmd_tuning_loss(&tuned, 8).unwrap();
        let random_loss = cmd_tuning_loss(&random, 8).unwrap();
        assert!(
            tuned_loss < random_loss,
            "tuned {tuned_loss} vs always-random {random_loss}"
        );
    }
}
