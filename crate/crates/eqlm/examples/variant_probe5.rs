// Scratch probe: feature representation sweep for the LS-IELM agent.
use eqlm::agents::{epsilon_at, greedy_action, heuristic_action, ReplayMemory, Transition};
use eqlm::cartpole::CartPoleEnv;
use eqlm::linalg::Matrix;
use eqlm::rng::run_rngs;
use eqlm::AgentConfig;
use rand::Rng;

struct Features {
    w: Vec<[f64; 4]>, // n_hidden rows
    b: Vec<f64>,
    tanh: bool,
    normalize: bool,
}

impl Features {
    fn new(n_hidden: usize, scale: f64, tanh: bool, normalize: bool, rng: &mut impl Rng) -> Self {
        let w = (0..n_hidden)
            .map(|_| std::array::from_fn(|_| rng.random_range(-scale..scale)))
            .collect();
        let b = (0..n_hidden).map(|_| rng.random_range(-scale..scale)).collect();
        Features { w, b, tanh, normalize }
    }

    fn hidden(&self, s: &[f64; 4]) -> Vec<f64> {
        let s = if self.normalize {
            [s[0] / 2.4, s[1] / 3.0, s[2] / 0.2094, s[3] / 3.0]
        } else {
            *s
        };
        self.w
            .iter()
            .zip(&self.b)
            .map(|(w, b)| {
                let z: f64 = w.iter().zip(&s).map(|(wi, si)| wi * si).sum::<f64>() + b;
                if self.tanh {
                    z.tanh()
                } else {
                    1.0 / (1.0 + (-z).exp())
                }
            })
            .collect()
    }

    fn hidden_matrix(&self, states: &[[f64; 4]]) -> Matrix {
        let n = self.w.len();
        let mut data = Vec::with_capacity(states.len() * n);
        for s in states {
            data.extend(self.hidden(s));
        }
        Matrix::from_vec(states.len(), n, data).unwrap()
    }
}

fn q2(feat: &Features, beta: &Matrix, s: &[f64; 4]) -> [f64; 2] {
    let h = feat.hidden(s);
    let mut out = [0.0; 2];
    for (i, hi) in h.iter().enumerate() {
        out[0] += hi * beta.get(i, 0);
        out[1] += hi * beta.get(i, 1);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run(cfg: &AgentConfig, seed: u64, scale: f64, tanh: bool, normalize: bool, freeze_a: bool) -> f64 {
    let (mut env_rng, mut net_rng, mut policy_rng) = run_rngs(seed);
    let n_hidden = cfg.n_hidden;
    let feat = Features::new(n_hidden, scale, tanh, normalize, &mut net_rng);
    let gamma_bar = cfg.gamma_bar.unwrap();
    let mut beta = Matrix::from_fn(n_hidden, 2, |_, _| net_rng.random_range(-1.0..1.0)).unwrap();
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
                greedy_action(&q2(&feat, &beta, &s))
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
                let states: Vec<[f64; 4]> = batch.iter().map(|tr| tr.state).collect();
                let h = feat.hidden_matrix(&states);
                let mut ts = Vec::new();
                for tr in &batch {
                    let mut row = q2(&feat, &beta, &tr.state);
                    row[tr.action] = if tr.terminal {
                        tr.reward
                    } else {
                        let q = q2(&feat, &target_beta, &tr.next_state);
                        tr.reward + cfg.gamma * q[0].max(q[1])
                    };
                    ts.extend_from_slice(&row);
                }
                let tm = Matrix::from_vec(batch.len(), 2, ts).unwrap();
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
    returns[500..].iter().sum::<f64>() / 100.0
}

fn main() {
    let seeds = [1000u64, 1001, 1002];
    for tanh in [false, true] {
        for normalize in [false, true] {
            for scale in [1.0f64, 3.0] {
                for freeze_a in [false, true] {
                    for gamma_bar in [1e-3f64, 1e-2, 0.1, 1.0, 10.0, 100.0] {
                        let mut cfg = AgentConfig::eqlm_cartpole();
                        cfg.gamma_bar = Some(gamma_bar);
                        let finals: Vec<f64> = seeds
                            .iter()
                            .map(|&s| run(&cfg, s, scale, tanh, normalize, freeze_a).round())
                            .collect();
                        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
                        if mean > 60.0 {
                            println!(
                                "tanh={tanh} norm={normalize} scale={scale} freeze={freeze_a} gb={gamma_bar:<8.0e} finals {finals:?} mean {mean:.0}"
                            );
                        }
                    }
                }
            }
        }
    }
    println!("sweep done (printed only mean>60)");
}
