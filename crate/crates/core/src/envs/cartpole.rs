use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvSpec, Environment, Step};
use crate::error::{Error, Result};

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_LIMIT: f64 = 0.2;
const X_LIMIT: f64 = 2.4;
const MAX_STEPS: usize = 1000;
const INIT_NOISE: f64 = 0.01;

/// Cart-pole balancing with a continuous force in [-1, 1] (scaled by 10 N).
///
/// Observation is `(x, theta, v, omega)`. Each step that leaves the pole
/// within `|theta| <= 0.2` and the cart within `|x| <= 2.4` earns 1; the
/// episode ends on the first violation or after 1000 steps.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    steps: usize,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        CartPole {
            state: [0.0; 4],
            steps: 0,
            done: true,
        }
    }

    /// Places the system in an exact state; the episode counter restarts.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }
}

impl Environment for CartPole {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_inputs: 4,
            action_kind: ActionKind::Continuous(1),
            max_steps: MAX_STEPS,
        }
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = [0.0; 4];
        for v in &mut s {
            *v = rng.gen_range(-INIT_NOISE..=INIT_NOISE);
        }
        self.set_state(s);
        s.to_vec()
    }

    fn step(&mut self, action: Action<'_>) -> Result<Step> {
        if self.done {
            return Err(Error::ContractViolation("cart-pole stepped after done".into()));
        }
        let a = match action {
            Action::Continuous(&[a]) if a.is_finite() => a.clamp(-1.0, 1.0),
            other => return Err(Error::Environment(format!("cart-pole expects one finite channel, got {other:?}"))),
        };
        let force = FORCE_MAG * a;
        let [x, theta, v, omega] = self.state;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * omega * omega * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        // semi-implicit Euler
        let v = v + TAU * x_acc;
        let x = x + TAU * v;
        let omega = omega + TAU * theta_acc;
        let theta = theta + TAU * omega;
        self.state = [x, theta, v, omega];
        self.steps += 1;

        let failed = theta.abs() > THETA_LIMIT || x.abs() > X_LIMIT;
        self.done = failed || self.steps >= MAX_STEPS;
        Ok(Step {
            obs: self.state.to_vec(),
            reward: if failed { 0.0 } else { 1.0 },
            done: self.done,
        })
    }
}
