use super::Environment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    /// Entering a terminal outcome ends the episode; no bootstrap follows.
    pub terminal: bool,
}

/// Exact model: `outcomes[s][a]` lists the possible results of action `a` in
/// state `s`. States with no actions are terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel {
    pub n_actions: usize,
    pub outcomes: Vec<Vec<Vec<Outcome>>>,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Bellman-optimality iteration on Q until successive sweeps differ by less
/// than `tol` in max-norm. Terminal states get an all-zero row.
pub fn value_iteration(model: &TabularModel, gamma: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::ContractViolation(format!("gamma {gamma} outside [0, 1]")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::ContractViolation(format!("tolerance {tol} must be positive")));
    }
    let n = model.outcomes.len();
    let mut q = vec![vec![0.0; model.n_actions]; n];
    let value = |q: &Vec<Vec<f64>>, s: usize| -> f64 {
        if model.outcomes[s].is_empty() {
            0.0
        } else {
            q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    for _ in 0..MAX_SWEEPS {
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for (s, actions) in model.outcomes.iter().enumerate() {
            for (a, outcomes) in actions.iter().enumerate() {
                let v: f64 = outcomes
                    .iter()
                    .map(|o| {
                        let boot = if o.terminal { 0.0 } else { gamma * value(&q, o.next) };
                        o.prob * (o.reward + boot)
                    })
                    .sum();
                delta = delta.max((v - q[s][a]).abs());
                next[s][a] = v;
            }
        }
        q = next;
        if delta < tol {
            return Ok(q);
        }
    }
    Err(Error::ContractViolation("value iteration did not converge".into()))
}

pub fn value_iteration_env<E: Environment + ?Sized>(env: &E, gamma: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
    let model = env
        .tabular()
        .ok_or_else(|| Error::Unsupported("environment exposes no tabular model".into()))?;
    value_iteration(&model, gamma, tol)
}
