// Scratch diagnostics: watch Q values, beta norm, and episode lengths.
use eqlm::agents::{run_episode, Agent, EqlmAgent};
use eqlm::cartpole::CartPoleEnv;
use eqlm::rng::run_rngs;
use eqlm::AgentConfig;

fn main() {
    let gamma_bar: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1.827e-5);
    let mut cfg = AgentConfig::eqlm_cartpole();
    cfg.gamma_bar = Some(gamma_bar);
    let (mut env_rng, mut net_rng, mut policy_rng) = run_rngs(1000);
    let mut agent = EqlmAgent::new(cfg.clone(), &mut net_rng).unwrap();
    let mut env = CartPoleEnv::new();
    let probe = [0.0, 0.0, 0.0, 0.0];
    println!("gamma_bar={gamma_bar}");
    for ep in 0..600 {
        let ret = run_episode(&mut agent, &mut env, ep, &mut env_rng, &mut policy_rng).unwrap();
        if ep % 25 == 0 || ep == 599 {
            let q = agent.q_policy(&probe);
            let beta_norm = agent.lsielm().net().output_weights().frobenius_norm();
            let ad_diag: f64 = (0..cfg.n_hidden)
                .map(|i| agent.lsielm().a_dagger().get(i, i))
                .sum::<f64>()
                / cfg.n_hidden as f64;
            println!(
                "ep {ep:3} ret {ret:5.1} q0 {:8.4} q1 {:8.4} |beta| {beta_norm:8.4} tr(Ad)/n {ad_diag:10.3e} steps {}",
                q[0], q[1], agent.clock().global_step
            );
        }
    }
}
