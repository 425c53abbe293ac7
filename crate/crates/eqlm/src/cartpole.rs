//! Deterministic cart-pole balancing task: Barto-style dynamics, two
//! fixed-magnitude force actions, +1 reward per step, termination at 12
//! degrees of tilt, the track limits, or 200 steps.

use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.8;
pub const MASS_CART: f64 = 1.0;
pub const MASS_POLE: f64 = 0.1;
pub const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole length; the pivot-to-centre-of-mass distance.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = MASS_POLE * POLE_HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
/// Integration time step in seconds.
pub const TAU: f64 = 0.02;
/// Episode ends when |theta| exceeds 12 degrees.
pub const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;
/// Episode ends when |x| exceeds 2.4 m.
pub const X_LIMIT: f64 = 2.4;
/// Hard cap on episode length.
pub const MAX_STEPS: usize = 200;

/// Number of discrete actions (push left / push right).
pub const N_ACTIONS: usize = 2;

/// Physical state of the cart-pole system. The observation vector is
/// exactly `[x, x_dot, theta, theta_dot]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    /// Cart position (m).
    pub x: f64,
    /// Cart velocity (m/s).
    pub x_dot: f64,
    /// Pole angle from vertical (rad).
    pub theta: f64,
    /// Pole angular velocity (rad/s).
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn observation(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    fn is_finite(&self) -> bool {
        self.observation().iter().all(|v| v.is_finite())
    }

    fn out_of_bounds(&self) -> bool {
        self.x < -X_LIMIT || self.x > X_LIMIT || self.theta < -THETA_LIMIT || self.theta > THETA_LIMIT
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub state: CartPoleState,
    pub reward: f64,
    pub terminal: bool,
}

/// One cart-pole episode environment. Single-threaded; run independent
/// instances in parallel for multi-run campaigns.
#[derive(Debug, Clone)]
pub struct CartPoleEnv {
    state: CartPoleState,
    step_count: usize,
    done: bool,
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPoleEnv {
    pub fn new() -> Self {
        CartPoleEnv {
            state: CartPoleState {
                x: 0.0,
                x_dot: 0.0,
                theta: 0.0,
                theta_dot: 0.0,
            },
            step_count: 0,
            done: false,
        }
    }

    /// Starts an episode from an explicit state (no reset noise).
    pub fn from_state(state: CartPoleState) -> Self {
        CartPoleEnv {
            state,
            step_count: 0,
            done: false,
        }
    }

    /// Starts a new episode: every component i.i.d. uniform on
    /// [-0.05, 0.05), step clock zeroed.
    pub fn reset(&mut self, rng: &mut impl Rng) -> CartPoleState {
        self.state = CartPoleState {
            x: rng.random_range(-0.05..0.05),
            x_dot: rng.random_range(-0.05..0.05),
            theta: rng.random_range(-0.05..0.05),
            theta_dot: rng.random_range(-0.05..0.05),
        };
        self.step_count = 0;
        self.done = false;
        self.state
    }

    pub fn state(&self) -> &CartPoleState {
        &self.state
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Applies action 0 (push left) or 1 (push right) for one time step.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action >= N_ACTIONS {
            return Err(Error::InvalidInput(format!("action {action} not in {{0, 1}}")));
        }
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        self.step_with_force(force)
    }

    /// Advances the dynamics under an arbitrary horizontal force. `step`
    /// routes through this; tests use it directly with zero force to watch
    /// the un-actuated system.
    pub fn step_with_force(&mut self, force: f64) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called on a terminated episode"));
        }

        let CartPoleState {
            mut x,
            mut x_dot,
            mut theta,
            mut theta_dot,
        } = self.state;

        let cos_theta = theta.cos();
        let sin_theta = theta.sin();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_theta) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta * cos_theta / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS;

        // Explicit Euler, positions first with the old velocities.
        x += TAU * x_dot;
        x_dot += TAU * x_acc;
        theta += TAU * theta_dot;
        theta_dot += TAU * theta_acc;

        self.state = CartPoleState {
            x,
            x_dot,
            theta,
            theta_dot,
        };
        if !self.state.is_finite() {
            return Err(Error::NonFinite("cartpole step"));
        }
        self.step_count += 1;
        self.done = self.state.out_of_bounds() || self.step_count >= MAX_STEPS;

        Ok(StepOutcome {
            state: self.state,
            reward: 1.0,
            terminal: self.done,
        })
    }
}

/// One recorded step of a trajectory dump.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub action: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// Writes a trajectory as CSV with columns
/// `step,x,x_dot,theta,theta_dot,action,reward,terminal`.
pub fn write_trajectory_csv<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> io::Result<()> {
    writeln!(w, "step,x,x_dot,theta,theta_dot,action,reward,terminal")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.step, r.x, r.x_dot, r.theta, r.theta_dot, r.action, r.reward, r.terminal
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Total mechanical energy of the frictionless system: cart kinetic
    /// energy, pole kinetic energy (translation of the centre of mass plus
    /// rotation about it), and gravitational potential of the pole.
    fn mechanical_energy(s: &CartPoleState) -> f64 {
        let l = POLE_HALF_LENGTH;
        let i_cm = MASS_POLE * (2.0 * l) * (2.0 * l) / 12.0;
        let ke_cart = 0.5 * MASS_CART * s.x_dot * s.x_dot;
        let v_sq = s.x_dot * s.x_dot
            + 2.0 * l * s.theta_dot * s.x_dot * s.theta.cos()
            + l * l * s.theta_dot * s.theta_dot;
        let ke_pole = 0.5 * MASS_POLE * v_sq + 0.5 * i_cm * s.theta_dot * s.theta_dot;
        let pe = MASS_POLE * GRAVITY * l * s.theta.cos();
        ke_cart + ke_pole + pe
    }

    /// Independent scalar transcription of the equations of motion, used
    /// as the oracle for `step`.
    fn oracle_step(s: &CartPoleState, force: f64) -> CartPoleState {
        let sin_t = s.theta.sin();
        let cos_t = s.theta.cos();
        let temp = (force + POLE_MASS_LENGTH * s.theta_dot.powi(2) * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t.powi(2) / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;
        CartPoleState {
            x: s.x + TAU * s.x_dot,
            x_dot: s.x_dot + TAU * x_acc,
            theta: s.theta + TAU * s.theta_dot,
            theta_dot: s.theta_dot + TAU * theta_acc,
        }
    }

    #[test]
    fn reset_is_deterministic_per_seed() {
        let mut env_a = CartPoleEnv::new();
        let mut env_b = CartPoleEnv::new();
        let a = env_a.reset(&mut ChaCha8Rng::seed_from_u64(99));
        let b = env_b.reset(&mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn reset_components_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut env = CartPoleEnv::new();
        for _ in 0..200 {
            let s = env.reset(&mut rng);
            for v in s.observation() {
                assert!((-0.05..=0.05).contains(&v));
            }
        }
    }

    #[test]
    fn reset_distribution_is_centred() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut env = CartPoleEnv::new();
        let mut sums = [0.0f64; 4];
        let n = 10_000;
        for _ in 0..n {
            let s = env.reset(&mut rng);
            for (acc, v) in sums.iter_mut().zip(s.observation()) {
                *acc += v;
            }
        }
        for acc in sums {
            assert!((acc / n as f64).abs() < 0.005);
        }
    }

    #[test]
    fn push_right_from_rest_moves_cart_right_and_pole_left() {
        let mut env = CartPoleEnv::from_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
        });
        let out = env.step(1).unwrap();
        assert!(out.state.x_dot > 0.0);
        assert!(out.state.theta_dot < 0.0);
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut env = CartPoleEnv::new();
        env.reset(&mut rng);
        for i in 0..50 {
            let action = i % 2;
            let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
            let want = oracle_step(env.state(), force);
            let out = env.step(action).unwrap();
            assert_eq!(out.state, want);
            if out.terminal {
                break;
            }
        }
    }

    #[test]
    fn crossing_the_angle_limit_terminates() {
        // theta_dot large enough that one integration step carries theta
        // just past 12 degrees.
        let theta0 = THETA_LIMIT - 0.001;
        let mut env = CartPoleEnv::from_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: theta0,
            theta_dot: 0.1,
        });
        let out = env.step(0).unwrap();
        assert!(out.state.theta > THETA_LIMIT);
        assert!(out.terminal);

        // Just inside the limit: still running.
        let mut env = CartPoleEnv::from_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: theta0,
            theta_dot: 0.0,
        });
        let out = env.step(1).unwrap();
        assert!(out.state.theta.abs() <= THETA_LIMIT);
        assert!(!out.terminal);
    }

    #[test]
    fn two_hundred_surviving_steps_cap_the_episode() {
        // A small stabilising feedback rule keeps the pole up long enough
        // to hit the step cap.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut env = CartPoleEnv::new();
        env.reset(&mut rng);
        let mut total = 0.0;
        let mut last_terminal = false;
        for _ in 0..MAX_STEPS {
            let s = env.state();
            let action = if 3.0 * s.theta + s.theta_dot > 0.0 { 1 } else { 0 };
            let out = env.step(action).unwrap();
            total += out.reward;
            last_terminal = out.terminal;
            if out.terminal {
                break;
            }
        }
        assert_eq!(total, 200.0);
        assert!(last_terminal);
        assert_eq!(env.step_count(), MAX_STEPS);
    }

    #[test]
    fn stepping_a_terminal_episode_is_a_usage_error() {
        let mut env = CartPoleEnv::from_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: THETA_LIMIT - 1e-4,
            theta_dot: 2.0,
        });
        let out = env.step(0).unwrap();
        assert!(out.terminal);
        assert!(matches!(env.step(0), Err(Error::Usage(_))));
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut env = CartPoleEnv::new();
        assert!(matches!(env.step(2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn no_non_terminal_state_escapes_the_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut env = CartPoleEnv::new();
        for _ in 0..100 {
            env.reset(&mut rng);
            loop {
                let action = rng.random_range(0..N_ACTIONS);
                let out = env.step(action).unwrap();
                if out.terminal {
                    break;
                }
                assert!(out.state.x.abs() <= X_LIMIT);
                assert!(out.state.theta.abs() <= THETA_LIMIT);
            }
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_trajectories() {
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut env = CartPoleEnv::new();
            env.reset(&mut rng);
            let mut states = Vec::new();
            loop {
                let action = rng.random_range(0..N_ACTIONS);
                let out = env.step(action).unwrap();
                states.push(out.state.observation().map(f64::to_bits));
                if out.terminal {
                    break;
                }
            }
            states
        };
        assert_eq!(run(123), run(123));
        assert_ne!(run(123), run(124));
    }

    #[test]
    fn unforced_energy_drift_is_euler_sized() {
        // Without actuation the dynamics conserve energy; explicit Euler
        // lets it drift by O(tau) per unit time at this scale.
        let mut env = CartPoleEnv::from_state(CartPoleState {
            x: 0.1,
            x_dot: 0.2,
            theta: 0.08,
            theta_dot: -0.3,
        });
        let e0 = mechanical_energy(env.state());
        let mut max_step_drift = 0.0f64;
        let mut prev = e0;
        for _ in 0..100 {
            let out = env.step_with_force(0.0).unwrap();
            let e = mechanical_energy(&out.state);
            max_step_drift = max_step_drift.max((e - prev).abs());
            prev = e;
            if out.terminal {
                break;
            }
        }
        // Per-step drift bounded by a modest multiple of tau, and total
        // drift stays well under the energy scale of the system.
        assert!(max_step_drift < 0.5 * TAU, "per-step drift {max_step_drift}");
        assert!((prev - e0).abs() < 0.05 * e0.abs());
    }

    #[test]
    fn trajectory_csv_schema_and_determinism() {
        let record = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut env = CartPoleEnv::new();
            env.reset(&mut rng);
            let mut rows = Vec::new();
            for step in 0.. {
                let action = step % 2;
                let out = env.step(action).unwrap();
                rows.push(TrajectoryRow {
                    step,
                    x: out.state.x,
                    x_dot: out.state.x_dot,
                    theta: out.state.theta,
                    theta_dot: out.state.theta_dot,
                    action,
                    reward: out.reward,
                    terminal: out.terminal,
                });
                if out.terminal {
                    break;
                }
            }
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &rows).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let csv = record(11);
        assert!(csv.starts_with("step,x,x_dot,theta,theta_dot,action,reward,terminal\n"));
        let last = csv.trim_end().lines().last().unwrap();
        assert!(last.ends_with(",true"));
        assert_eq!(csv, record(11));
    }
}
