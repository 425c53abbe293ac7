// Scratch probe: state normalization and memory-size variants.
use eqlm::agents::{epsilon_at, greedy_action, heuristic_action, ReplayMemory, Transition};
use eqlm::cartpole::CartPoleEnv;
use eqlm::elm::{LsielmState, Slfn, WeightInit};
use eqlm::linalg::Matrix;
use eqlm::rng::run_rngs;
use eqlm::AgentConfig;
use rand::Rng;

fn forward2(net: &Slfn, beta: &Matrix, s: &[f64; 4]) -> [f64; 2] {
    let o = net.forward_with_beta(s, beta).unwrap();
    [o[0], o[1]]
}

fn norm(s: [f64; 4], on: bool) -> [f64; 4] {
    if !on {
        return s;
    }
    [s[0] / 2.4, s[1] / 3.0, s[2] / 0.2094, s[3] / 3.0]
}

fn run(cfg: &AgentConfig, seed: u64, normalize: bool) -> Vec<f64> {
    let (mut env_rng, mut net_rng, mut policy_rng) = run_rngs(seed);
    let net = Slfn::random(4, cfg.n_hidden, 2, WeightInit::Uniform { scale: 1.0 }, &mut net_rng).unwrap();
    let mut target_beta = net.output_weights().clone();
    let mut state_ls = LsielmState::new(net, cfg.gamma_bar.unwrap()).unwrap();
    let mut memory = ReplayMemory::new(cfg.n_mem);
    let mut env = CartPoleEnv::new();
    let mut returns = Vec::new();
    let mut steps_since_sync = 0u64;

    for ep in 0..cfg.n_ep {
        let mut s = norm(env.reset(&mut env_rng).observation(), normalize);
        let eps = epsilon_at(ep, cfg);
        let mut total = 0.0;
        let mut t = 0usize;
        loop {
            let action = if ep < cfg.n_h {
                heuristic_action(t)
            } else if policy_rng.random::<f64>() < eps {
                policy_rng.random_range(0..2)
            } else {
                greedy_action(&forward2(state_ls.net(), state_ls.net().output_weights(), &s))
            };
            let out = env.step(action).unwrap();
            total += out.reward;
            let next = norm(out.state.observation(), normalize);
            memory.push(Transition {
                state: s,
                action,
                reward: out.reward,
                next_state: next,
                terminal: out.terminal,
            });
            if memory.len() >= cfg.k {
                let batch = memory.sample(cfg.k, &mut policy_rng);
                let mut xs = Vec::new();
                let mut ts = Vec::new();
                for tr in &batch {
                    xs.extend_from_slice(&tr.state);
                    let mut row = forward2(state_ls.net(), state_ls.net().output_weights(), &tr.state);
                    row[tr.action] = if tr.terminal {
                        tr.reward
                    } else {
                        let q = forward2(state_ls.net(), &target_beta, &tr.next_state);
                        tr.reward + cfg.gamma * q[0].max(q[1])
                    };
                    ts.extend_from_slice(&row);
                }
                let x = Matrix::from_vec(batch.len(), 4, xs).unwrap();
                let tm = Matrix::from_vec(batch.len(), 2, ts).unwrap();
                if state_ls.is_initialized() {
                    state_ls.update(&x, &tm).unwrap();
                } else {
                    state_ls.init(&x, &tm).unwrap();
                }
            }
            steps_since_sync += 1;
            if steps_since_sync >= cfg.c_target as u64 {
                target_beta = state_ls.net().output_weights().clone();
                steps_since_sync = 0;
            }
            s = next;
            t += 1;
            if out.terminal {
                break;
            }
        }
        returns.push(total);
    }
    returns
}

fn main() {
    for gamma_bar in [1.827e-5f64, 1.0, 1.0 / 1.827e-5] {
        for normalize in [false, true] {
            for n_mem in [10_000usize, 500] {
                let mut cfg = AgentConfig::eqlm_cartpole();
                cfg.gamma_bar = Some(gamma_bar);
                cfg.n_mem = n_mem;
                let mut finals = Vec::new();
                for seed in [1000u64, 1001, 1002] {
                    let r = run(&cfg, seed, normalize);
                    finals.push((r[500..].iter().sum::<f64>() / 100.0).round());
                }
                println!("gb={gamma_bar:<10.3e} norm={normalize:<5} n_mem={n_mem:<6} final100 {finals:?}");
            }
        }
    }
}
