use super::{Action, ActionKind, EnvSpec, Environment, Outcome, Step, TabularModel};
use crate::error::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Deterministic chain of `n` states starting at state 0.
///
/// `left` moves one state down (staying at 0), `right` one state up. Moving
/// right from state `n - 2` enters the terminal state `n - 1` and pays the
/// goal reward; every other step pays 0. Episodes are capped at `4 n` steps.
/// The observation is the one-hot encoding of the state followed by its index.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    n_states: usize,
    goal_reward: f64,
    state: usize,
    steps: usize,
    done: bool,
}

impl ChainMdp {
    pub fn new(n_states: usize, goal_reward: f64) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::InvalidDimension(format!("chain needs at least 2 states, got {n_states}")));
        }
        if !goal_reward.is_finite() {
            return Err(Error::ContractViolation("goal reward must be finite".into()));
        }
        Ok(ChainMdp {
            n_states,
            goal_reward,
            state: 0,
            steps: 0,
            done: true,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn observation(&self, state: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.n_states + 1];
        obs[state] = 1.0;
        obs[self.n_states] = state as f64;
        obs
    }

    fn transition(&self, state: usize, action: usize) -> (usize, f64, bool) {
        if action == RIGHT {
            let next = state + 1;
            if next == self.n_states - 1 {
                (next, self.goal_reward, true)
            } else {
                (next, 0.0, false)
            }
        } else {
            (state.saturating_sub(1), 0.0, false)
        }
    }
}

impl Environment for ChainMdp {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_inputs: self.n_states + 1,
            action_kind: ActionKind::Discrete(2),
            max_steps: 4 * self.n_states,
        }
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        self.observation(0)
    }

    fn step(&mut self, action: Action<'_>) -> Result<Step> {
        if self.done {
            return Err(Error::ContractViolation("chain stepped after done".into()));
        }
        let a = match action {
            Action::Discrete(a) if a < 2 => a,
            other => return Err(Error::Environment(format!("chain expects action 0 or 1, got {other:?}"))),
        };
        let (next, reward, terminal) = self.transition(self.state, a);
        self.state = next;
        self.steps += 1;
        self.done = terminal || self.steps >= 4 * self.n_states;
        Ok(Step {
            obs: self.observation(next),
            reward,
            done: self.done,
        })
    }

    fn tabular(&self) -> Option<TabularModel> {
        let n = self.n_states;
        let outcomes = (0..n)
            .map(|s| {
                if s == n - 1 {
                    return Vec::new();
                }
                (0..2)
                    .map(|a| {
                        let (next, reward, terminal) = self.transition(s, a);
                        vec![Outcome {
                            prob: 1.0,
                            next,
                            reward,
                            terminal,
                        }]
                    })
                    .collect()
            })
            .collect();
        Some(TabularModel { n_actions: 2, outcomes })
    }
}
