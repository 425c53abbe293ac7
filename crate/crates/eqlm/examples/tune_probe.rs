// Scratch: extended gamma grid + qnet check under normalization.
use eqlm::runner::{cmd_tuning_loss, run_campaign, ExperimentConfig};

fn main() {
    for gb in [0.3f64, 0.5, 0.8, 1.2, 2.0, 4.0] {
        let mut cfg = ExperimentConfig::eqlm_cartpole();
        cfg.gamma_bar = Some(gb);
        cfg.base_seed = 7000;
        let loss = cmd_tuning_loss(&cfg, 8).unwrap();
        let mut check = cfg.clone();
        check.n_runs = 10;
        check.base_seed = 42;
        let a = run_campaign(&check).unwrap();
        println!(
            "gb={gb:<5} loss={loss:>7.0} | final {:>6.1} ci ({:>6.1},{:>6.1}) std {:>5.1} auc {:>6.0}",
            a.final_mean_summary.mean,
            a.final_mean_summary.ci_low,
            a.final_mean_summary.ci_high,
            a.final_mean_summary.std,
            a.auc_summary.mean
        );
    }
    let mut cfg = ExperimentConfig::qnet_cartpole();
    cfg.n_runs = 10;
    cfg.base_seed = 42;
    let a = run_campaign(&cfg).unwrap();
    println!(
        "qnet alpha=0.0065: final {:.1} ci ({:.1},{:.1}) std {:.1} auc {:.0} (need >=120, auc >= 65000)",
        a.final_mean_summary.mean,
        a.final_mean_summary.ci_low,
        a.final_mean_summary.ci_high,
        a.final_mean_summary.std,
        a.auc_summary.mean
    );
}
