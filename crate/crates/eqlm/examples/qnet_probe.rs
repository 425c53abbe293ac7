// Scratch probe: Q-network learning-rate scale.
use eqlm::runner::{run_campaign, ExperimentConfig};

fn main() {
    let alpha: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.0065);
    let runs: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let mut cfg = ExperimentConfig::qnet_cartpole();
    cfg.alpha = Some(alpha);
    cfg.n_runs = runs;
    cfg.base_seed = 1000;
    let artifact = run_campaign(&cfg).unwrap();
    let finals: Vec<f64> = artifact.runs.iter().map(|r| r.final_mean.round()).collect();
    println!(
        "alpha={alpha} finals={finals:?} mean={:.1} auc_mean={:.0}",
        artifact.final_mean_summary.mean, artifact.auc_summary.mean
    );
}
