//! Run configuration in flat `key = value` form.
//!
//! Blank lines and text after `#` are ignored. Every key may appear at most
//! once and unknown keys are rejected. Keys not given keep their defaults.

use std::fmt::Write;
use std::path::PathBuf;

use crate::dtree::QLearnParams;
use crate::envs;
use crate::error::{Error, Result};
use crate::evolution::EvoParams;
use crate::social::{Parallel, SocialConfig};

/// Splits config text into `(key, value)` pairs, rejecting duplicates and
/// lines without `=`. Parse errors carry the one-based line number.
pub fn key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            pos: i + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse {
                pos: i + 1,
                msg: "empty key".into(),
            });
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::config(k, "given more than once"));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: String,
    pub evo: EvoParams,
    pub social: SocialConfig,
    /// `None` until resolved; see [`RunConfig::resolve_seed`].
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: "cartpole".into(),
            evo: EvoParams::default(),
            social: SocialConfig {
                parallel: None,
                ..SocialConfig::default()
            },
            seed: None,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| Error::config(key, format!("`{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

impl RunConfig {
    /// Parses and fully validates a config.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut collab: Option<usize> = None;
        let mut workers: Option<usize> = None;
        let mut iterations: Option<usize> = None;
        for (key, v) in key_values(text)? {
            let k = key.as_str();
            match k {
                "env" => cfg.env = v,
                "population_size" => cfg.evo.population_size = parse_num(k, &v)?,
                "generations" => cfg.evo.generations = parse_num(k, &v)?,
                "genotype_length" => cfg.evo.genotype_length = parse_num(k, &v)?,
                "gene_value_max" => cfg.evo.gene_value_max = parse_num(k, &v)?,
                "crossover_prob" => cfg.evo.crossover_prob = parse_num(k, &v)?,
                "mutation_prob" => cfg.evo.mutation_prob = parse_num(k, &v)?,
                "mutation_rate" => cfg.evo.mutation_rate = parse_num(k, &v)?,
                "tournament_size" => cfg.evo.tournament_size = parse_num(k, &v)?,
                "carry_q" => cfg.evo.carry_q = parse_bool(k, &v)?,
                "collab_episodes" => collab = Some(parse_num(k, &v)?),
                "individual_episodes" => cfg.social.individual_episodes = parse_num(k, &v)?,
                "parallel_episodes" => workers = Some(parse_num(k, &v)?),
                "collab_iterations" => iterations = Some(parse_num(k, &v)?),
                "alpha" => cfg.social.q.alpha = parse_num(k, &v)?,
                "gamma" => cfg.social.q.gamma = parse_num(k, &v)?,
                "epsilon" => cfg.social.q.epsilon = parse_num(k, &v)?,
                "collab_exploration" => cfg.social.collab_exploration = parse_bool(k, &v)?,
                "bins" => cfg.social.bins = parse_num(k, &v)?,
                "seed" => cfg.seed = Some(parse_num(k, &v)?),
                "out" => cfg.out = Some(PathBuf::from(v)),
                _ => return Err(Error::config(k, "unknown key")),
            }
        }
        cfg.social.parallel = match (workers, iterations) {
            (None, None) => None,
            (Some(w), Some(i)) => Some(Parallel {
                workers: w,
                iterations: i,
            }),
            (Some(w), None) => {
                let c = collab.unwrap_or(cfg.social.collab_episodes);
                if w == 0 || !c.is_multiple_of(w) {
                    return Err(Error::config(
                        "parallel_episodes",
                        format!("{w} does not divide collab_episodes = {c}"),
                    ));
                }
                Some(Parallel {
                    workers: w,
                    iterations: c / w,
                })
            }
            (None, Some(_)) => return Err(Error::config("collab_iterations", "requires parallel_episodes")),
        };
        cfg.social.collab_episodes = match (collab, cfg.social.parallel) {
            (Some(c), _) => c,
            (None, Some(p)) => p.workers * p.iterations,
            (None, None) => cfg.social.collab_episodes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let env = envs::make_env(&self.env).map_err(|e| Error::config("env", e.to_string()))?;
        self.evo.validate()?;
        self.social.validate()?;
        envs::ActionAdapter::new(&env.spec(), self.social.bins)?;
        Ok(())
    }

    /// Fixes the seed, drawing one from the OS when none was configured.
    pub fn resolve_seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(rand::random)
    }

    pub fn q(&self) -> QLearnParams {
        self.social.q
    }

    /// Social settings with the resolved seed filled in.
    pub fn social_config(&self) -> SocialConfig {
        SocialConfig {
            seed: self.seed.unwrap_or(0),
            ..self.social.clone()
        }
    }

    /// Every key with its effective value, in a form [`RunConfig::parse`]
    /// reads back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.evo;
        let so = &self.social;
        writeln!(s, "env = {}", self.env).unwrap();
        writeln!(s, "population_size = {}", e.population_size).unwrap();
        writeln!(s, "generations = {}", e.generations).unwrap();
        writeln!(s, "genotype_length = {}", e.genotype_length).unwrap();
        writeln!(s, "gene_value_max = {}", e.gene_value_max).unwrap();
        writeln!(s, "crossover_prob = {:?}", e.crossover_prob).unwrap();
        writeln!(s, "mutation_prob = {:?}", e.mutation_prob).unwrap();
        writeln!(s, "mutation_rate = {:?}", e.mutation_rate).unwrap();
        writeln!(s, "tournament_size = {}", e.tournament_size).unwrap();
        writeln!(s, "carry_q = {}", e.carry_q).unwrap();
        writeln!(s, "collab_episodes = {}", so.collab_episodes).unwrap();
        writeln!(s, "individual_episodes = {}", so.individual_episodes).unwrap();
        if let Some(p) = so.parallel {
            writeln!(s, "parallel_episodes = {}", p.workers).unwrap();
            writeln!(s, "collab_iterations = {}", p.iterations).unwrap();
        }
        writeln!(s, "alpha = {:?}", so.q.alpha).unwrap();
        writeln!(s, "gamma = {:?}", so.q.gamma).unwrap();
        writeln!(s, "epsilon = {:?}", so.q.epsilon).unwrap();
        writeln!(s, "collab_exploration = {}", so.collab_exploration).unwrap();
        writeln!(s, "bins = {}", so.bins).unwrap();
        if let Some(seed) = self.seed {
            writeln!(s, "seed = {seed}").unwrap();
        }
        if let Some(out) = &self.out {
            writeln!(s, "out = {}", out.display()).unwrap();
        }
        s
    }
}
