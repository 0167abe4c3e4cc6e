use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionKind, EnvSpec, Environment, Step};
use crate::error::{Error, Result};

pub const COAST: usize = 0;
pub const THRUST: usize = 1;

const GRAVITY: f64 = 1.62;
const THRUST_ACCEL: f64 = 4.0;
const DT: f64 = 0.1;
const SAFE_SPEED: f64 = 1.0;
const LANDING_REWARD: f64 = 100.0;
const CRASH_REWARD: f64 = -100.0;
const THRUST_PENALTY: f64 = 0.3;
const FUEL_UNITS: f64 = 100.0;
const MAX_STEPS: usize = 500;
const START_ALTITUDE: (f64, f64) = (8.0, 12.0);

/// One-dimensional vertical lander with two discrete actions.
///
/// Observation is `(altitude, velocity, fuel fraction)`; velocity is positive
/// upward. Thrust costs 0.3 reward and one unit of fuel per step. Touching
/// down (altitude <= 0) ends the episode with +100 when the descent speed is
/// below 1, or -100 otherwise. Episodes are capped at 500 steps.
#[derive(Debug, Clone)]
pub struct Lander1d {
    altitude: f64,
    velocity: f64,
    fuel: f64,
    unlimited_fuel: bool,
    steps: usize,
    done: bool,
}

impl Default for Lander1d {
    fn default() -> Self {
        Self::new()
    }
}

impl Lander1d {
    pub fn new() -> Self {
        Lander1d {
            altitude: 0.0,
            velocity: 0.0,
            fuel: FUEL_UNITS,
            unlimited_fuel: false,
            steps: 0,
            done: true,
        }
    }

    pub fn with_unlimited_fuel() -> Self {
        Lander1d {
            unlimited_fuel: true,
            ..Self::new()
        }
    }

    /// Starts an episode from an exact altitude and velocity with a full tank.
    pub fn set_state(&mut self, altitude: f64, velocity: f64) -> Vec<f64> {
        self.altitude = altitude;
        self.velocity = velocity;
        self.fuel = FUEL_UNITS;
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.altitude, self.velocity, self.fuel / FUEL_UNITS]
    }
}

impl Environment for Lander1d {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_inputs: 3,
            action_kind: ActionKind::Discrete(2),
            max_steps: MAX_STEPS,
        }
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let altitude = rng.gen_range(START_ALTITUDE.0..START_ALTITUDE.1);
        self.set_state(altitude, 0.0)
    }

    fn step(&mut self, action: Action<'_>) -> Result<Step> {
        if self.done {
            return Err(Error::ContractViolation("lander stepped after done".into()));
        }
        let thrust = match action {
            Action::Discrete(COAST) => false,
            Action::Discrete(THRUST) => true,
            other => return Err(Error::Environment(format!("lander expects action 0 or 1, got {other:?}"))),
        };
        let mut reward = 0.0;
        let mut accel = -GRAVITY;
        if thrust {
            reward -= THRUST_PENALTY;
            if self.unlimited_fuel || self.fuel >= 1.0 {
                accel += THRUST_ACCEL;
                if !self.unlimited_fuel {
                    self.fuel -= 1.0;
                }
            }
        }
        self.velocity += DT * accel;
        self.altitude += DT * self.velocity;
        self.steps += 1;

        if self.altitude <= 0.0 {
            self.altitude = 0.0;
            reward += if self.velocity.abs() < SAFE_SPEED {
                LANDING_REWARD
            } else {
                CRASH_REWARD
            };
            self.done = true;
        } else if self.steps >= MAX_STEPS {
            self.done = true;
        }
        Ok(Step {
            obs: self.observation(),
            reward,
            done: self.done,
        })
    }
}
