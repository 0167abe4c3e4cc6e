//! Post-training tools: greedy evaluation, coefficient sweeps, and pruning
//! driven by recorded visit counts.

use std::fmt;

use rayon::prelude::*;

use crate::dtree::{self, DecisionTree, PruneReport};
use crate::envs::{ActionAdapter, EnvFactory, Environment};
use crate::error::{Error, Result};
use crate::seeds::{self, Domain};

pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub returns: Vec<f64>,
}

impl Evaluation {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        Evaluation {
            mean,
            std: var.sqrt(),
            returns,
        }
    }

    /// `episode,return`
    pub fn returns_csv(&self) -> String {
        let mut out = String::from("episode,return\n");
        for (i, r) in self.returns.iter().enumerate() {
            out.push_str(&format!("{i},{r}\n"));
        }
        out
    }
}

/// Reset seed of evaluation episode `episode`.
pub fn evaluation_seed(seed: u64, episode: usize) -> u64 {
    seeds::episode_seed(seed, Domain::Evaluation, 0, 0, episode as u64)
}

/// One greedy episode without learning. When `count_visits` is set the
/// tree's visit counters record every routed decision.
pub fn greedy_episode<E: Environment + ?Sized>(
    tree: &mut DecisionTree,
    env: &mut E,
    adapter: &mut ActionAdapter,
    reset_seed: u64,
    count_visits: bool,
) -> Result<f64> {
    let mut obs = env.reset(reset_seed);
    let mut ret = 0.0;
    loop {
        let a = if count_visits {
            let leaf = tree.route_counted(&obs)?;
            dtree::argmax(tree.q(leaf))
        } else {
            tree.greedy_action(&obs)?
        };
        let step = adapter.step(env, a)?;
        ret += step.reward;
        if step.done {
            return Ok(ret);
        }
        obs = step.obs;
    }
}

/// Greedy rollouts on fresh environments; episode `k` is reset with
/// [`evaluation_seed`]`(seed, k)`. The tree is not modified.
pub fn evaluate<F: EnvFactory>(
    tree: &DecisionTree,
    factory: &F,
    n_episodes: usize,
    seed: u64,
    bins: usize,
) -> Result<Evaluation> {
    if n_episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let spec = factory.make().spec();
    check_tree(tree, &ActionAdapter::new(&spec, bins)?, spec.n_inputs)?;
    let returns: Result<Vec<f64>> = (0..n_episodes)
        .into_par_iter()
        .map(|k| {
            let mut env = factory.make();
            let mut adapter = ActionAdapter::new(&spec, bins)?;
            let mut t = tree.clone();
            greedy_episode(&mut t, &mut env, &mut adapter, evaluation_seed(seed, k), false)
        })
        .collect();
    Ok(Evaluation::from_returns(returns?))
}

fn check_tree(tree: &DecisionTree, adapter: &ActionAdapter, n_inputs: usize) -> Result<()> {
    if tree.n_inputs() != n_inputs || tree.n_actions() != adapter.n_actions() {
        return Err(Error::InvalidDimension(format!(
            "tree has {} inputs and {} actions, environment needs {} and {}",
            tree.n_inputs(),
            tree.n_actions(),
            n_inputs,
            adapter.n_actions()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    /// Zero-based weight index.
    Weight(usize),
    Bias,
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Weight(i) => write!(f, "w{}", i + 1),
            Coefficient::Bias => f.write_str("bias"),
        }
    }
}

impl std::str::FromStr for Coefficient {
    type Err = Error;

    /// `bias` or `w<k>` with a one-based `k`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "bias" {
            return Ok(Coefficient::Bias);
        }
        s.strip_prefix('w')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|k| *k >= 1)
            .map(|k| Coefficient::Weight(k - 1))
            .ok_or_else(|| Error::config("coefficient", format!("expected `bias` or `w<k>`, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Preorder index among the tree's splits.
    pub split: usize,
    pub coefficient: Coefficient,
    pub values: Vec<f64>,
    pub episodes_per_value: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "must not be empty"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::config("values", format!("{v} is not finite")));
        }
        if self.episodes_per_value == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        Ok(())
    }

    /// Parses `key = value` lines: `split`, `coefficient`, `values`
    /// (comma-separated), `episodes`, `seed`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut split = None;
        let mut coefficient = None;
        let mut values = None;
        let mut episodes = DEFAULT_EVAL_EPISODES;
        let mut seed = 0;
        for (key, value) in crate::config::key_values(text)? {
            let bad = |msg: String| Error::config(key.as_str(), msg);
            match key.as_str() {
                "split" => split = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "coefficient" => coefficient = Some(value.parse()?),
                "values" => {
                    let vals: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    values = Some(vals.map_err(|e| bad(format!("{e}")))?);
                }
                "episodes" => episodes = value.parse().map_err(|e| bad(format!("{e}")))?,
                "seed" => seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                _ => return Err(Error::config(key.as_str(), "unknown key")),
            }
        }
        let spec = SweepSpec {
            split: split.ok_or_else(|| Error::config("split", "missing"))?,
            coefficient: coefficient.ok_or_else(|| Error::config("coefficient", "missing"))?,
            values: values.ok_or_else(|| Error::config("values", "missing"))?,
            episodes_per_value: episodes,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub std: f64,
}

/// Copy of `tree` with one coefficient replaced.
pub fn with_coefficient(tree: &DecisionTree, split: usize, coefficient: Coefficient, value: f64) -> Result<DecisionTree> {
    let mut t = tree.clone();
    let n_splits = tree.splits().len();
    let s = t
        .split_mut(split)
        .ok_or_else(|| Error::IndexOutOfRange(format!("split {split} of {n_splits}")))?;
    match coefficient {
        Coefficient::Bias => s.bias = value,
        Coefficient::Weight(i) => {
            let n = s.weights.len();
            *s.weights
                .get_mut(i)
                .ok_or_else(|| Error::IndexOutOfRange(format!("weight {} of {n}", i + 1)))? = value;
        }
    }
    Ok(t)
}

/// Evaluates one modified copy of the tree per value. Every row uses the
/// same evaluation seeds, so a row depends only on its value.
pub fn sweep<F: EnvFactory>(tree: &DecisionTree, spec: &SweepSpec, factory: &F, bins: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    // surface index errors before any simulation
    with_coefficient(tree, spec.split, spec.coefficient, 0.0)?;
    spec.values
        .iter()
        .map(|&value| {
            let t = with_coefficient(tree, spec.split, spec.coefficient, value)?;
            let e = evaluate(&t, factory, spec.episodes_per_value, spec.seed, bins)?;
            Ok(SweepRow {
                value,
                mean: e.mean,
                std: e.std,
            })
        })
        .collect()
}

/// `value,mean,std`
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,mean,std\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.value, r.mean, r.std));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub report: PruneReport,
    pub visits: Vec<u64>,
    pub macs_before: u64,
    pub macs_after: u64,
    pub mean_before: f64,
    pub mean_after: f64,
}

impl fmt::Display for PruneOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.report)?;
        writeln!(f, "macs_before: {}", self.macs_before)?;
        writeln!(f, "macs_after: {}", self.macs_after)?;
        writeln!(f, "mean_before: {}", self.mean_before)?;
        writeln!(f, "mean_after: {}", self.mean_after)
    }
}

/// Counts node visits over `n_episodes` greedy episodes, prunes with
/// `threshold`, and evaluates both trees on the same seeds.
pub fn prune_with_traces<F: EnvFactory>(
    tree: &DecisionTree,
    factory: &F,
    n_episodes: usize,
    threshold: f64,
    seed: u64,
    bins: usize,
) -> Result<(DecisionTree, PruneOutcome)> {
    if n_episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let spec = factory.make().spec();
    check_tree(tree, &ActionAdapter::new(&spec, bins)?, spec.n_inputs)?;
    let counts: Result<Vec<Vec<u64>>> = (0..n_episodes)
        .into_par_iter()
        .map(|k| {
            let mut env = factory.make();
            let mut adapter = ActionAdapter::new(&spec, bins)?;
            let mut t = tree.clone();
            t.reset_visits();
            greedy_episode(&mut t, &mut env, &mut adapter, evaluation_seed(seed, k), true)?;
            Ok(t.visits().to_vec())
        })
        .collect();
    let mut visits = vec![0u64; tree.n_nodes()];
    for c in counts? {
        visits.iter_mut().zip(c).for_each(|(v, c)| *v += c);
    }
    let (pruned, report) = dtree::prune(tree, &visits, threshold)?;
    let before = evaluate(tree, factory, n_episodes, seed, bins)?;
    let after = evaluate(&pruned, factory, n_episodes, seed, bins)?;
    let outcome = PruneOutcome {
        report,
        visits,
        macs_before: tree.mac_count(),
        macs_after: pruned.mac_count(),
        mean_before: before.mean,
        mean_after: after.mean,
    };
    Ok((pruned, outcome))
}
