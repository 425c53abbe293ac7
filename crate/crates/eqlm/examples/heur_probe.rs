// Scratch: heuristic effect over the first 50 episodes, paired seeds.
use eqlm::runner::{run_campaign, ExperimentConfig};

fn main() {
    let first50 = |n_h: usize, gb: f64| -> f64 {
        let mut cfg = ExperimentConfig::eqlm_cartpole();
        cfg.gamma_bar = Some(gb);
        cfg.n_h = n_h;
        cfg.n_ep = 50;
        cfg.n_runs = 10;
        cfg.base_seed = 4242;
        let artifact = run_campaign(&cfg).unwrap();
        let total: f64 = artifact.curves.iter().flat_map(|c| c.returns()).sum();
        total / (50.0 * 10.0)
    };
    for gb in [0.3f64, 0.5] {
        let with_h = first50(5, gb);
        let without = first50(0, gb);
        println!("gb={gb}: first-50 mean with heuristic {with_h:.1} vs without {without:.1}");
    }
}
