//! Social training: collaborative and individual phases, the generation loop,
//! and episode-budget accounting.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::dtree::{average_trees, DecisionTree, QLearnParams, Transition};
use crate::envs::{ActionAdapter, EnvFactory, EnvSpec, Environment};
use crate::error::{Error, Result};
use crate::evolution::{self, EvoParams, Fitness, Individual};
use crate::grammar::{translate, Grammar, TranslationResult};
use crate::seeds::{self, Domain};

/// Collaborative episodes split over `workers` independent copies of the
/// population, `iterations` episodes each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallel {
    pub workers: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialConfig {
    /// `e_c`, collaborative episodes per generation.
    pub collab_episodes: usize,
    /// `e_i`, individual episodes per agent per generation.
    pub individual_episodes: usize,
    pub parallel: Option<Parallel>,
    pub q: QLearnParams,
    pub seed: u64,
    /// Whether agents explore (epsilon-greedy) when proposing actions.
    pub collab_exploration: bool,
    pub bins: usize,
}

impl Default for SocialConfig {
    fn default() -> Self {
        SocialConfig {
            collab_episodes: 1000,
            individual_episodes: 3,
            parallel: Some(Parallel {
                workers: 10,
                iterations: 100,
            }),
            q: QLearnParams::default(),
            seed: 0,
            collab_exploration: true,
            bins: crate::actionmap::DEFAULT_BINS,
        }
    }
}

impl SocialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.individual_episodes == 0 {
            return Err(Error::config("individual_episodes", "must be at least 1"));
        }
        if let Some(p) = self.parallel {
            if p.workers == 0 {
                return Err(Error::config("parallel_episodes", "must be at least 1"));
            }
            if p.iterations == 0 {
                return Err(Error::config("collab_iterations", "must be at least 1"));
            }
            if p.workers * p.iterations != self.collab_episodes {
                return Err(Error::config(
                    "collab_episodes",
                    format!(
                        "parallel_episodes x collab_iterations = {} but collab_episodes = {}",
                        p.workers * p.iterations,
                        self.collab_episodes
                    ),
                ));
            }
        }
        if self.bins < 2 {
            return Err(Error::config("bins", "must be at least 2"));
        }
        self.q.validate()
    }

    fn collab_params(&self) -> QLearnParams {
        if self.collab_exploration {
            self.q
        } else {
            self.q.greedy()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeLedger {
    pub collaborative_episodes: u64,
    pub individual_episodes: u64,
}

impl EpisodeLedger {
    pub fn total(&self) -> u64 {
        self.collaborative_episodes + self.individual_episodes
    }
}

impl std::ops::AddAssign for EpisodeLedger {
    fn add_assign(&mut self, other: Self) {
        self.collaborative_episodes += other.collaborative_episodes;
        self.individual_episodes += other.individual_episodes;
    }
}

impl fmt::Display for EpisodeLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "collaborative_episodes {}", self.collaborative_episodes)?;
        writeln!(f, "individual_episodes {}", self.individual_episodes)?;
        writeln!(f, "total_episodes {}", self.total())
    }
}

/// Uniform pick from the proposal list, so each action wins with probability
/// equal to its share of proposals. A single proposal is returned without
/// consuming randomness.
pub fn vote<R: Rng + ?Sized>(proposals: &[usize], rng: &mut R) -> Result<usize> {
    match proposals {
        [] => Err(Error::EmptyProposals),
        [only] => Ok(*only),
        _ => Ok(proposals[rng.gen_range(0..proposals.len())]),
    }
}

fn check_agents(agents: &[DecisionTree], spec: &EnvSpec, adapter: &ActionAdapter) -> Result<()> {
    for (i, a) in agents.iter().enumerate() {
        if a.n_inputs() != spec.n_inputs || a.n_actions() != adapter.n_actions() {
            return Err(Error::InvalidDimension(format!(
                "agent {i} has {}x{} inputs/actions, environment needs {}x{}",
                a.n_inputs(),
                a.n_actions(),
                spec.n_inputs,
                adapter.n_actions()
            )));
        }
    }
    Ok(())
}

/// Runs `episodes` episodes on one shared environment. At every step each
/// agent proposes an action, a vote picks the executed one, and all agents
/// learn from the resulting transition. The environment is reset at the start
/// of each episode with a seed drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn collaborative_phase<E: Environment + ?Sized, R: Rng + ?Sized>(
    agents: &mut [DecisionTree],
    env: &mut E,
    episodes: usize,
    q: &QLearnParams,
    bins: usize,
    ledger: &mut EpisodeLedger,
    rng: &mut R,
) -> Result<()> {
    if agents.is_empty() || episodes == 0 {
        return Ok(());
    }
    let spec = env.spec();
    let mut adapter = ActionAdapter::new(&spec, bins)?;
    check_agents(agents, &spec, &adapter)?;
    let mut proposals = Vec::with_capacity(agents.len());
    for _ in 0..episodes {
        let mut obs = env.reset(rng.next_u64());
        loop {
            proposals.clear();
            for agent in agents.iter() {
                proposals.push(agent.act(&obs, q, rng)?);
            }
            let a = vote(&proposals, rng)?;
            let step = adapter.step(env, a)?;
            let t = Transition {
                s: obs,
                a,
                r: step.reward,
                s_next: step.obs,
                done: step.done,
            };
            for agent in agents.iter_mut() {
                agent.q_update(&t, q)?;
            }
            if t.done {
                break;
            }
            obs = t.s_next;
        }
        ledger.collaborative_episodes += 1;
    }
    Ok(())
}

/// One epsilon-greedy Q-learning episode; returns the undiscounted return.
pub fn learning_episode<E: Environment + ?Sized, R: Rng + ?Sized>(
    agent: &mut DecisionTree,
    env: &mut E,
    adapter: &mut ActionAdapter,
    q: &QLearnParams,
    reset_seed: u64,
    rng: &mut R,
) -> Result<f64> {
    let mut obs = env.reset(reset_seed);
    let mut ret = 0.0;
    loop {
        let a = agent.act(&obs, q, rng)?;
        let step = adapter.step(env, a)?;
        ret += step.reward;
        let t = Transition {
            s: obs,
            a,
            r: step.reward,
            s_next: step.obs,
            done: step.done,
        };
        agent.q_update(&t, q)?;
        if t.done {
            return Ok(ret);
        }
        obs = t.s_next;
    }
}

/// Runs `episodes` learning episodes on a private environment and returns the
/// mean undiscounted return.
pub fn individual_phase<E: Environment + ?Sized, R: Rng + ?Sized>(
    agent: &mut DecisionTree,
    env: &mut E,
    episodes: usize,
    q: &QLearnParams,
    bins: usize,
    ledger: &mut EpisodeLedger,
    rng: &mut R,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::config("individual_episodes", "must be at least 1"));
    }
    let spec = env.spec();
    let mut adapter = ActionAdapter::new(&spec, bins)?;
    check_agents(std::slice::from_ref(agent), &spec, &adapter)?;
    let mut sum = 0.0;
    for _ in 0..episodes {
        let seed = rng.next_u64();
        sum += learning_episode(agent, env, &mut adapter, q, seed, rng)?;
        ledger.individual_episodes += 1;
    }
    Ok(sum / episodes as f64)
}

/// Runs the collaborative phase on `workers` deep copies of the population,
/// each with its own environment and the stream
/// `(seed, Collaborative, generation, worker)`. Returns the copies worker by
/// worker, in worker order.
#[allow(clippy::too_many_arguments)]
pub fn collaborative_workers<F: EnvFactory>(
    agents: &[DecisionTree],
    factory: &F,
    workers: usize,
    iterations: usize,
    q: &QLearnParams,
    bins: usize,
    seed: u64,
    generation: u64,
    ledger: &mut EpisodeLedger,
) -> Result<Vec<Vec<DecisionTree>>> {
    let results: Vec<Result<(Vec<DecisionTree>, EpisodeLedger)>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut copies = agents.to_vec();
            let mut env = factory.make();
            let mut rng = seeds::stream(seed, Domain::Collaborative, generation, w as u64);
            let mut local = EpisodeLedger::default();
            collaborative_phase(&mut copies, &mut env, iterations, q, bins, &mut local, &mut rng)?;
            Ok((copies, local))
        })
        .collect();
    let mut out = Vec::with_capacity(workers);
    for r in results {
        let (copies, local) = r?;
        *ledger += local;
        out.push(copies);
    }
    Ok(out)
}

/// Parallel collaborative phase followed by per-agent averaging of the
/// worker copies.
#[allow(clippy::too_many_arguments)]
pub fn parallel_collaborative<F: EnvFactory>(
    agents: &mut [DecisionTree],
    factory: &F,
    workers: usize,
    iterations: usize,
    q: &QLearnParams,
    bins: usize,
    seed: u64,
    generation: u64,
    ledger: &mut EpisodeLedger,
) -> Result<()> {
    if workers == 0 || iterations == 0 {
        return Err(Error::ContractViolation("parallel phase needs workers >= 1 and iterations >= 1".into()));
    }
    if agents.is_empty() {
        return Ok(());
    }
    let copies = collaborative_workers(agents, factory, workers, iterations, q, bins, seed, generation, ledger)?;
    let mut per_agent: Vec<Vec<DecisionTree>> = (0..agents.len()).map(|_| Vec::with_capacity(workers)).collect();
    for worker in copies {
        for (j, tree) in worker.into_iter().enumerate() {
            per_agent[j].push(tree);
        }
    }
    let merged: Vec<Result<DecisionTree>> = per_agent.par_iter().map(|c| average_trees(c)).collect();
    for (agent, m) in agents.iter_mut().zip(merged) {
        *agent = m?;
    }
    Ok(())
}

/// The collaborative phase as configured: parallel with averaging, or serial
/// on the stream of worker 0.
pub fn run_collaborative<F: EnvFactory>(
    agents: &mut [DecisionTree],
    factory: &F,
    soc: &SocialConfig,
    generation: u64,
    ledger: &mut EpisodeLedger,
) -> Result<()> {
    let q = soc.collab_params();
    match soc.parallel {
        Some(p) => parallel_collaborative(
            agents,
            factory,
            p.workers,
            p.iterations,
            &q,
            soc.bins,
            soc.seed,
            generation,
            ledger,
        ),
        None => {
            let mut env = factory.make();
            let mut rng = seeds::stream(soc.seed, Domain::Collaborative, generation, 0);
            collaborative_phase(agents, &mut env, soc.collab_episodes, &q, soc.bins, ledger, &mut rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best fitness within this generation (NaN when every individual is invalid).
    pub best_fitness: f64,
    /// Mean fitness over valid individuals (NaN when none).
    pub mean_fitness: f64,
    pub invalid_count: usize,
    /// Episodes simulated in this generation.
    pub episodes_used: u64,
    /// Cumulative ledger after this generation.
    pub ledger: EpisodeLedger,
    pub wall_seconds: f64,
    /// Best tree found so far and its fitness.
    pub best_so_far: Option<(DecisionTree, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: DecisionTree,
    pub best_fitness: f64,
    pub ledger: EpisodeLedger,
    pub log: Vec<GenerationRecord>,
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// `generation,best_fitness,mean_fitness,collab_episodes,individual_episodes,total_episodes,wall_seconds`
pub fn run_log_csv(log: &[GenerationRecord]) -> String {
    let mut out =
        String::from("generation,best_fitness,mean_fitness,collab_episodes,individual_episodes,total_episodes,wall_seconds\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.3}\n",
            r.generation,
            fmt_f64(r.best_fitness),
            fmt_f64(r.mean_fitness),
            r.ledger.collaborative_episodes,
            r.ledger.individual_episodes,
            r.ledger.total(),
            r.wall_seconds
        ));
    }
    out
}

/// `generation,best_fitness,mean_fitness,invalid_count,episodes_used`
pub fn evolution_csv(log: &[GenerationRecord]) -> String {
    let mut out = String::from("generation,best_fitness,mean_fitness,invalid_count,episodes_used\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.generation,
            fmt_f64(r.best_fitness),
            fmt_f64(r.mean_fitness),
            r.invalid_count,
            r.episodes_used
        ));
    }
    out
}

/// Full training run. See [`train_observed`].
pub fn train<F: EnvFactory>(grammar: &Grammar, factory: &F, evo: &EvoParams, soc: &SocialConfig) -> Result<TrainOutcome> {
    train_observed(grammar, factory, evo, soc, |_| {})
}

/// Evolves tree structures for `evo.generations` generations. Each
/// generation translates the population, runs the collaborative phase over
/// the valid trees, scores every valid tree by its individual phase, and
/// replaces the best-so-far tree only on strict improvement. `on_generation`
/// sees each record as soon as it is complete.
pub fn train_observed<F: EnvFactory>(
    grammar: &Grammar,
    factory: &F,
    evo: &EvoParams,
    soc: &SocialConfig,
    mut on_generation: impl FnMut(&GenerationRecord),
) -> Result<TrainOutcome> {
    evo.validate()?;
    soc.validate()?;
    let probe = factory.make();
    let spec = probe.spec();
    let n_actions = ActionAdapter::new(&spec, soc.bins)?.n_actions();
    drop(probe);
    if let Some(n) = grammar.n_inputs() {
        if n != spec.n_inputs {
            return Err(Error::InvalidDimension(format!(
                "grammar has {n} inputs, environment has {}",
                spec.n_inputs
            )));
        }
    }

    let start = Instant::now();
    let mut ledger = EpisodeLedger::default();
    let mut log = Vec::with_capacity(evo.generations);
    let mut best: Option<(DecisionTree, f64)> = None;
    let mut pop: Vec<Individual> = Vec::new();

    for gen in 0..evo.generations {
        let mut pop_rng = seeds::stream(soc.seed, Domain::Population, gen as u64, 0);
        pop = if gen == 0 {
            evolution::init_pop(evo, &mut pop_rng)
        } else {
            evolution::update_pop(&pop, evo, &mut pop_rng)?
        };

        // Translate and build trees; carried trees are kept as they are.
        let built: Vec<Result<Option<DecisionTree>>> = pop
            .par_iter_mut()
            .enumerate()
            .map(|(idx, ind)| {
                if ind.phenotype.is_none() {
                    ind.phenotype = Some(translate(&ind.genotype, grammar));
                }
                match (ind.tree.take(), ind.phenotype.as_ref().unwrap()) {
                    (Some(t), _) if evo.carry_q => Ok(Some(t)),
                    (_, TranslationResult::Complete(ph)) => {
                        let mut rng = seeds::stream(soc.seed, Domain::QInit, gen as u64, idx as u64);
                        ph.to_tree(spec.n_inputs, n_actions, &mut rng).map(Some)
                    }
                    (_, TranslationResult::Incomplete { .. }) => Ok(None),
                }
            })
            .collect();
        let mut valid_idx = Vec::new();
        let mut agents = Vec::new();
        for (idx, b) in built.into_iter().enumerate() {
            if let Some(t) = b? {
                valid_idx.push(idx);
                agents.push(t);
            }
        }

        let before = ledger;
        run_collaborative(&mut agents, factory, soc, gen as u64, &mut ledger)?;

        let scored: Vec<Result<(DecisionTree, f64, EpisodeLedger)>> = agents
            .into_par_iter()
            .zip(valid_idx.par_iter())
            .map(|(mut tree, &idx)| {
                let mut env = factory.make();
                let mut rng = seeds::stream(soc.seed, Domain::Individual, gen as u64, idx as u64);
                let mut local = EpisodeLedger::default();
                let f = individual_phase(
                    &mut tree,
                    &mut env,
                    soc.individual_episodes,
                    &soc.q,
                    soc.bins,
                    &mut local,
                    &mut rng,
                )?;
                Ok((tree, f, local))
            })
            .collect();

        for ind in pop.iter_mut() {
            ind.fitness = Fitness::Invalid;
        }
        let mut gen_best: Option<usize> = None;
        let mut sum = 0.0;
        for (r, &idx) in scored.into_iter().zip(&valid_idx) {
            let (tree, f, local) = r?;
            ledger += local;
            sum += f;
            pop[idx].fitness = Fitness::Score(f);
            pop[idx].tree = Some(tree);
            if gen_best.is_none_or(|b| f > pop[b].fitness.score().unwrap()) {
                gen_best = Some(idx);
            }
        }
        if let Some(b) = gen_best {
            let f = pop[b].fitness.score().unwrap();
            if best.as_ref().is_none_or(|(_, incumbent)| f > *incumbent) {
                best = Some((pop[b].tree.clone().unwrap(), f));
            }
        }
        if !evo.carry_q {
            // Trees are only needed again for carried Q-values.
            for ind in pop.iter_mut() {
                ind.tree = None;
            }
        }

        let n_valid = valid_idx.len();
        let record = GenerationRecord {
            generation: gen,
            best_fitness: gen_best.map_or(f64::NAN, |b| pop[b].fitness.score().unwrap()),
            mean_fitness: if n_valid > 0 { sum / n_valid as f64 } else { f64::NAN },
            invalid_count: pop.len() - n_valid,
            episodes_used: ledger.total() - before.total(),
            ledger,
            wall_seconds: start.elapsed().as_secs_f64(),
            best_so_far: best.clone(),
        };
        on_generation(&record);
        log.push(record);
    }

    let (best, best_fitness) = best.ok_or(Error::NoValidSolution)?;
    Ok(TrainOutcome {
        best,
        best_fitness,
        ledger,
        log,
    })
}

/// Episode budget of a run in which every individual is valid, computed
/// without simulating anything.
pub fn planned_budget(evo: &EvoParams, soc: &SocialConfig) -> EpisodeLedger {
    let g = evo.generations as u64;
    EpisodeLedger {
        collaborative_episodes: g * soc.collab_episodes as u64,
        individual_episodes: g * evo.population_size as u64 * soc.individual_episodes as u64,
    }
}

/// Cost and experience comparison against a non-social baseline that gives
/// each of the `p` agents `baseline_e` private episodes per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub population_size: u64,
    pub collab_episodes: u64,
    pub individual_episodes: u64,
    pub baseline_episodes: u64,
    /// `e_c + p * e_i`
    pub social_cost: u64,
    /// `p * baseline_e`
    pub baseline_cost: u64,
    pub cheaper: bool,
    /// `e_c + e_i`
    pub experience: u64,
    pub richer: bool,
    /// `100 * (baseline_cost - social_cost) / baseline_cost`; negative when
    /// the social scheme costs more.
    pub reduction_percent: f64,
}

pub fn budget_report(evo: &EvoParams, soc: &SocialConfig, baseline_e: u64) -> Result<BudgetReport> {
    budget_report_raw(
        evo.population_size as u64,
        soc.collab_episodes as u64,
        soc.individual_episodes as u64,
        baseline_e,
    )
}

pub fn budget_report_raw(p: u64, e_c: u64, e_i: u64, baseline_e: u64) -> Result<BudgetReport> {
    if baseline_e == 0 {
        return Err(Error::config("baseline_e", "must be at least 1"));
    }
    if p == 0 {
        return Err(Error::config("population_size", "must be at least 1"));
    }
    let social_cost = e_c + p * e_i;
    let baseline_cost = p * baseline_e;
    let experience = e_c + e_i;
    Ok(BudgetReport {
        population_size: p,
        collab_episodes: e_c,
        individual_episodes: e_i,
        baseline_episodes: baseline_e,
        social_cost,
        baseline_cost,
        cheaper: social_cost < baseline_cost,
        experience,
        richer: experience > baseline_e,
        reduction_percent: 100.0 * (baseline_cost as f64 - social_cost as f64) / baseline_cost as f64,
    })
}

impl BudgetReport {
    pub fn csv(&self) -> String {
        format!(
            "population_size,collab_episodes,individual_episodes,baseline_episodes,social_cost,baseline_cost,cheaper,experience,richer,reduction_percent\n\
             {},{},{},{},{},{},{},{},{},{:.1}\n",
            self.population_size,
            self.collab_episodes,
            self.individual_episodes,
            self.baseline_episodes,
            self.social_cost,
            self.baseline_cost,
            self.cheaper,
            self.experience,
            self.richer,
            self.reduction_percent
        )
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cost per generation: {} episodes social vs {} baseline ({})",
            self.social_cost,
            self.baseline_cost,
            if self.cheaper { "cheaper" } else { "not cheaper" }
        )?;
        writeln!(
            f,
            "experience per agent: {} episodes social vs {} baseline ({})",
            self.experience,
            self.baseline_episodes,
            if self.richer { "richer" } else { "not richer" }
        )?;
        writeln!(f, "{:.1}% cost reduction", self.reduction_percent)
    }
}
