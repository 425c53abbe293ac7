// Scratch probe: chunked learning-curve means for both agents.
use eqlm::runner::{run_campaign, AgentKind, ExperimentConfig};

fn main() {
    let kind = std::env::args().nth(1).unwrap_or_else(|| "eqlm".to_string());
    let runs: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mut cfg = match kind.as_str() {
        "qnet" => ExperimentConfig::qnet_cartpole(),
        "heuristic" => {
            let mut c = ExperimentConfig::eqlm_cartpole();
            c.agent = AgentKind::HeuristicOnly;
            c
        }
        _ => ExperimentConfig::eqlm_cartpole(),
    };
    cfg.n_runs = runs;
    cfg.base_seed = 1000;
    let t0 = std::time::Instant::now();
    let artifact = run_campaign(&cfg).unwrap();
    println!("agent={kind} runs={runs} wall={:.1}s", t0.elapsed().as_secs_f64());
    for (i, curve) in artifact.curves.iter().enumerate() {
        let chunks: Vec<String> = curve
            .returns()
            .chunks(50)
            .map(|c| format!("{:5.1}", c.iter().sum::<f64>() / c.len() as f64))
            .collect();
        println!("run {i}: {}", chunks.join(" "));
    }
    println!(
        "final_mean: mean={:.1} ci=({:.1},{:.1}) std={:.1}",
        artifact.final_mean_summary.mean,
        artifact.final_mean_summary.ci_low,
        artifact.final_mean_summary.ci_high,
        artifact.final_mean_summary.std
    );
    println!(
        "auc: mean={:.0} ci=({:.0},{:.0}) std={:.0}",
        artifact.auc_summary.mean,
        artifact.auc_summary.ci_low,
        artifact.auc_summary.ci_high,
        artifact.auc_summary.std
    );
}
