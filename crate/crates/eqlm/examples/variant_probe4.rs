// Scratch probe: frozen-gain vs updated-gain recursion, gamma sweep.
use eqlm::agents::{epsilon_at, greedy_action, heuristic_action, ReplayMemory, Transition};
use eqlm::cartpole::CartPoleEnv;
use eqlm::elm::{Slfn, WeightInit};
use eqlm::linalg::Matrix;
use eqlm::rng::run_rngs;
use eqlm::AgentConfig;
use rand::Rng;

fn forward2(net: &Slfn, beta: &Matrix, s: &[f64; 4]) -> [f64; 2] {
    let o = net.forward_with_beta(s, beta).unwrap();
    [o[0], o[1]]
}

fn run(cfg: &AgentConfig, seed: u64, freeze_a: bool) -> Vec<f64> {
    let (mut env_rng, mut net_rng, mut policy_rng) = run_rngs(seed);
    let net = Slfn::random(4, cfg.n_hidden, 2, WeightInit::Uniform { scale: 1.0 }, &mut net_rng).unwrap();
    let gamma_bar = cfg.gamma_bar.unwrap();
    let n_hidden = cfg.n_hidden;
    let mut beta = net.output_weights().clone();
    let mut target_beta = beta.clone();
    let mut a_dagger: Option<Matrix> = None;
    let mut memory = ReplayMemory::new(cfg.n_mem);
    let mut env = CartPoleEnv::new();
    let mut returns = Vec::new();
    let mut steps_since_sync = 0u64;

    for ep in 0..cfg.n_ep {
        let mut s = env.reset(&mut env_rng).observation();
        let eps = epsilon_at(ep, cfg);
        let mut total = 0.0;
        let mut t = 0usize;
        loop {
            let action = if ep < cfg.n_h {
                heuristic_action(t)
            } else if policy_rng.random::<f64>() < eps {
                policy_rng.random_range(0..2)
            } else {
                greedy_action(&forward2(&net, &beta, &s))
            };
            let out = env.step(action).unwrap();
            total += out.reward;
            let next = out.state.observation();
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
                    let mut row = forward2(&net, &beta, &tr.state);
                    row[tr.action] = if tr.terminal {
                        tr.reward
                    } else {
                        let q = forward2(&net, &target_beta, &tr.next_state);
                        tr.reward + cfg.gamma * q[0].max(q[1])
                    };
                    ts.extend_from_slice(&row);
                }
                let x = Matrix::from_vec(batch.len(), 4, xs).unwrap();
                let tm = Matrix::from_vec(batch.len(), 2, ts).unwrap();
                let h = net.hidden_matrix(&x).unwrap();
                match &mut a_dagger {
                    None => {
                        let a = Matrix::identity(n_hidden)
                            .scale(1.0 / gamma_bar)
                            .unwrap()
                            .add(&h.transpose().matmul(&h).unwrap())
                            .unwrap();
                        let ad = a.pinv().unwrap();
                        beta = ad.matmul(&h.transpose().matmul(&tm).unwrap()).unwrap();
                        a_dagger = Some(ad);
                    }
                    Some(ad) => {
                        let ht = h.transpose();
                        let ad_ht = ad.matmul(&ht).unwrap();
                        let inner = h
                            .matmul(&ad_ht)
                            .unwrap()
                            .add(&Matrix::identity(h.rows()))
                            .unwrap()
                            .pinv()
                            .unwrap();
                        let gain = ad_ht.matmul(&inner).unwrap();
                        let k_t = Matrix::identity(n_hidden)
                            .sub(&gain.matmul(&h).unwrap())
                            .unwrap();
                        beta = k_t
                            .matmul(&beta)
                            .unwrap()
                            .add(&k_t.matmul(&ad_ht.matmul(&tm).unwrap()).unwrap())
                            .unwrap();
                        if !freeze_a {
                            *ad = k_t.matmul(ad).unwrap();
                        }
                    }
                }
            }
            steps_since_sync += 1;
            if steps_since_sync >= cfg.c_target as u64 {
                target_beta = beta.clone();
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
    let seeds = [1000u64, 1001, 1002, 1003];
    let freeze = std::env::args().nth(1).map(|s| s == "freeze").unwrap_or(true);
    for gamma_bar in [1.827e-5f64, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1000.0, 54735.0] {
        let mut cfg = AgentConfig::eqlm_cartpole();
        cfg.gamma_bar = Some(gamma_bar);
        let mut finals = Vec::new();
        for seed in seeds {
            let r = run(&cfg, seed, freeze);
            finals.push((r[500..].iter().sum::<f64>() / 100.0).round());
        }
        println!("freeze_a={freeze} gb={gamma_bar:<10.3e} final100 {finals:?}");
    }
}
