//! Episodic environments.
//!
//! Environments are deterministic given the reset seed and the action
//! sequence. Continuous-control environments are driven by trees through an
//! [`ActionAdapter`] that applies the discretized action map.

mod cartpole;
mod chain;
mod lander;
mod tabular;

use std::fmt::Write;

pub use cartpole::CartPole;
pub use chain::{ChainMdp, LEFT, RIGHT};
pub use lander::{Lander1d, COAST, THRUST};
pub use tabular::{value_iteration, value_iteration_env, Outcome, TabularModel};

use crate::actionmap::DiscretizedActionMap;
use crate::dtree::DecisionTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Discrete(usize),
    /// Number of channels, each in [-1, 1].
    Continuous(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub n_inputs: usize,
    pub action_kind: ActionKind,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action<'a> {
    Discrete(usize),
    Continuous(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> EnvSpec;

    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Stepping after `done` is a contract violation.
    fn step(&mut self, action: Action<'_>) -> Result<Step>;

    /// Exact transition model, for tabular environments only.
    fn tabular(&self) -> Option<TabularModel> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }

    fn step(&mut self, action: Action<'_>) -> Result<Step> {
        (**self).step(action)
    }

    fn tabular(&self) -> Option<TabularModel> {
        (**self).tabular()
    }
}

/// Anything that can build fresh, independent environment instances.
pub trait EnvFactory: Sync {
    type Env: Environment;

    fn make(&self) -> Self::Env;
}

impl<E: Environment, F: Fn() -> E + Sync> EnvFactory for F {
    type Env = E;

    fn make(&self) -> E {
        self()
    }
}

/// Translates tree action indices into environment actions.
#[derive(Debug, Clone)]
pub struct ActionAdapter {
    kind: ActionKind,
    map: Option<DiscretizedActionMap>,
    buf: Vec<f64>,
}

impl ActionAdapter {
    pub fn new(spec: &EnvSpec, bins: usize) -> Result<Self> {
        match spec.action_kind {
            ActionKind::Discrete(k) => {
                if k < 2 {
                    return Err(Error::InvalidDimension(format!("discrete env with {k} actions")));
                }
                Ok(ActionAdapter {
                    kind: spec.action_kind,
                    map: None,
                    buf: Vec::new(),
                })
            }
            ActionKind::Continuous(n_a) => Ok(ActionAdapter {
                kind: spec.action_kind,
                map: Some(DiscretizedActionMap::new(n_a, bins)?),
                buf: vec![0.0; n_a],
            }),
        }
    }

    /// Number of discrete actions a tree must expose.
    pub fn n_actions(&self) -> usize {
        match (self.kind, &self.map) {
            (ActionKind::Discrete(k), _) => k,
            (_, Some(m)) => m.total_actions(),
            (ActionKind::Continuous(_), None) => unreachable!(),
        }
    }

    pub fn step<E: Environment + ?Sized>(&mut self, env: &mut E, a: usize) -> Result<Step> {
        match &self.map {
            None => {
                if a >= self.n_actions() {
                    return Err(Error::InvalidAction {
                        action: a,
                        limit: self.n_actions(),
                    });
                }
                env.step(Action::Discrete(a))
            }
            Some(m) => {
                m.write_continuous(a, &mut self.buf)?;
                env.step(Action::Continuous(&self.buf))
            }
        }
    }
}

/// Builds a native environment by name: `cartpole`, `lander1d`, or
/// `chain` / `chain:<n_states>` (default 7 states, goal reward 1).
pub fn make_env(name: &str) -> Result<Box<dyn Environment>> {
    match name {
        "cartpole" => Ok(Box::new(CartPole::new())),
        "lander1d" => Ok(Box::new(Lander1d::new())),
        "chain" => Ok(Box::new(ChainMdp::new(7, 1.0)?)),
        _ => {
            if let Some(n) = name.strip_prefix("chain:") {
                let n = n
                    .parse()
                    .map_err(|_| Error::Unsupported(format!("bad chain size in `{name}`")))?;
                return Ok(Box::new(ChainMdp::new(n, 1.0)?));
            }
            Err(Error::Unsupported(format!("unknown environment `{name}`")))
        }
    }
}

/// One greedy episode as CSV `step,obs0..obsN,action,reward,done`, where
/// `obs` is the observation the action was chosen from.
pub fn trace_greedy_episode<E: Environment + ?Sized>(
    tree: &DecisionTree,
    env: &mut E,
    bins: usize,
    seed: u64,
) -> Result<String> {
    let spec = env.spec();
    let mut adapter = ActionAdapter::new(&spec, bins)?;
    let mut out = String::from("step");
    for i in 0..spec.n_inputs {
        write!(out, ",obs{i}").unwrap();
    }
    out.push_str(",action,reward,done\n");
    let mut obs = env.reset(seed);
    for step in 0.. {
        let a = tree.greedy_action(&obs)?;
        let st = adapter.step(env, a)?;
        write!(out, "{step}").unwrap();
        for v in &obs {
            write!(out, ",{v:?}").unwrap();
        }
        writeln!(out, ",{a},{:?},{}", st.reward, st.done).unwrap();
        if st.done {
            break;
        }
        obs = st.obs;
    }
    Ok(out)
}
