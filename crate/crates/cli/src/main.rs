use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use socialtree::analysis::{self, SweepSpec, DEFAULT_EVAL_EPISODES};
use socialtree::config::RunConfig;
use socialtree::dtree::{self, DEFAULT_PRUNE_THRESHOLD};
use socialtree::envs::{make_env, Environment};
use socialtree::grammar::default_oblique_grammar;
use socialtree::social::{self, budget_report, planned_budget};
use socialtree::{DecisionTree, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_NO_SOLUTION: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "socialtree", version, about = "Evolve and analyse oblique decision-tree policies")]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a tree policy from a config file.
    Train {
        /// Config file, or a manifest.json written by a previous run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Validate the config and print the planned episode budget.
        #[arg(long)]
        dry_run: bool,
    },
    /// Greedy rollouts of a saved tree.
    Evaluate {
        tree: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Visit-ratio pruning of a saved tree.
    Prune {
        tree: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
        episodes: usize,
        #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one split coefficient and evaluate each value.
    Sweep {
        tree: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 7)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the planned cost against a non-social baseline.
    Budget {
        #[arg(long)]
        config: PathBuf,
        /// Private episodes per agent per generation in the baseline.
        #[arg(long)]
        baseline: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::InvalidConfig { .. }) => EXIT_INVALID_CONFIG,
        Some(Error::Parse { .. }) => EXIT_PARSE,
        Some(Error::NoValidSolution) => EXIT_NO_SOLUTION,
        _ => EXIT_FAILURE,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidConfig {
                field: "workers".into(),
                msg: "must be at least 1".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building thread pool")?;
    }
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            dry_run,
        } => cmd_train(&config, out, seed, dry_run),
        Command::Evaluate {
            tree,
            env,
            episodes,
            seed,
            bins,
            out,
        } => cmd_evaluate(&tree, &env, episodes, seed, bins, out.as_deref()),
        Command::Prune {
            tree,
            env,
            episodes,
            threshold,
            seed,
            bins,
            out,
        } => cmd_prune(&tree, &env, episodes, threshold, seed, bins, out.as_deref()),
        Command::Sweep {
            tree,
            spec,
            env,
            bins,
            out,
        } => cmd_sweep(&tree, &spec, &env, bins, out.as_deref()),
        Command::Budget { config, baseline } => cmd_budget(&config, baseline),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Loads a config file, or the `config` entry of a run manifest.
fn load_config(path: &Path) -> Result<RunConfig> {
    let raw = read(path)?;
    let text = match serde_json::from_str::<serde_json::Value>(&raw) {
        Ok(v) => v["config"]
            .as_str()
            .with_context(|| format!("{}: manifest has no `config` entry", path.display()))?
            .to_string(),
        Err(_) => raw,
    };
    RunConfig::parse(&text).with_context(|| format!("config {}", path.display()))
}

fn load_tree(path: &Path) -> Result<DecisionTree> {
    dtree::parse(&read(path)?).with_context(|| format!("tree {}", path.display()))
}

fn env_factory(name: &str) -> Result<impl Fn() -> Box<dyn Environment> + Sync + '_> {
    make_env(name).with_context(|| format!("environment `{name}`"))?;
    Ok(move || make_env(name).expect("environment name checked above"))
}

fn cmd_train(path: &Path, out: Option<PathBuf>, seed: Option<u64>, dry_run: bool) -> Result<()> {
    let mut cfg = load_config(path)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    if out.is_some() {
        cfg.out = out;
    }
    let budget = planned_budget(&cfg.evo, &cfg.social);
    if dry_run {
        print!("{budget}");
        return Ok(());
    }
    let seed = cfg.resolve_seed();
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(format!("seed_{seed}")));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let factory = env_factory(&cfg.env)?;
    let n_inputs = factory().spec().n_inputs;
    let grammar = default_oblique_grammar(n_inputs)?;
    let soc = cfg.social_config();

    write(&out.join("resolved.cfg"), &cfg.to_text())?;
    let manifest = |total: u64, status: &str| {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "env": cfg.env,
            "config": cfg.to_text(),
            "planned_episodes": budget.total(),
            "total_episodes": total,
            "status": status,
        })
    };
    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest(0, "running"))?,
    )?;

    let start = Instant::now();
    let mut write_err = None;
    let result = social::train_observed(&grammar, &factory, &cfg.evo, &soc, |rec| {
        eprintln!(
            "gen {:>4}  best {:>10.3}  mean {:>10.3}  invalid {:>4}  episodes {}",
            rec.generation,
            rec.best_fitness,
            rec.mean_fitness,
            rec.invalid_count,
            rec.ledger.total()
        );
        if let Some((tree, _)) = &rec.best_so_far {
            let path = out.join(format!("best_gen_{:03}.tree", rec.generation));
            if let Err(e) = write(&path, &tree.serialize()) {
                write_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            write(
                &out.join("manifest.json"),
                &serde_json::to_string_pretty(&manifest(budget.total(), "no_valid_solution"))?,
            )?;
            return Err(e.into());
        }
    };
    write(&out.join("run_log.csv"), &social::run_log_csv(&outcome.log))?;
    write(&out.join("evolution.csv"), &social::evolution_csv(&outcome.log))?;
    write(&out.join("best.tree"), &outcome.best.serialize())?;
    write(
        &out.join("ledger.txt"),
        &format!(
            "{}best_fitness: {}\n",
            outcome.ledger, outcome.best_fitness
        ),
    )?;
    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest(outcome.ledger.total(), "complete"))?,
    )?;
    println!(
        "best fitness {} after {} episodes in {:.1}s; artifacts in {}",
        outcome.best_fitness,
        outcome.ledger.total(),
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(tree: &Path, env: &str, episodes: usize, seed: u64, bins: usize, out: Option<&Path>) -> Result<()> {
    let tree = load_tree(tree)?;
    let factory = env_factory(env)?;
    let eval = analysis::evaluate(&tree, &factory, episodes, seed, bins)?;
    let summary = format!("mean: {}\nstd: {}\n", eval.mean, eval.std);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write(&dir.join("evaluation.csv"), &eval.returns_csv())?;
            write(&dir.join("evaluation.txt"), &summary)?;
            print!("{summary}");
        }
        None => {
            print!("{}", eval.returns_csv());
            eprint!("{summary}");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_prune(
    tree: &Path,
    env: &str,
    episodes: usize,
    threshold: f64,
    seed: u64,
    bins: usize,
    out: Option<&Path>,
) -> Result<()> {
    let tree = load_tree(tree)?;
    let factory = env_factory(env)?;
    let (pruned, outcome) = analysis::prune_with_traces(&tree, &factory, episodes, threshold, seed, bins)?;
    print!("{outcome}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write(&dir.join("prune_report.txt"), &outcome.to_string())?;
        write(&dir.join("pruned.tree"), &pruned.serialize())?;
        write(&dir.join("visits.csv"), &visits_csv(&tree, &outcome.visits))?;
    }
    Ok(())
}

fn visits_csv(tree: &DecisionTree, visits: &[u64]) -> String {
    let mut s = String::from("node_id,visits,parent_id\n");
    for (i, v) in visits.iter().enumerate() {
        let parent = tree.parent(i).map_or_else(|| "-1".to_string(), |p| p.to_string());
        s.push_str(&format!("{i},{v},{parent}\n"));
    }
    s
}

fn cmd_sweep(tree: &Path, spec: &Path, env: &str, bins: usize, out: Option<&Path>) -> Result<()> {
    let tree = load_tree(tree)?;
    let spec = SweepSpec::parse(&read(spec)?).with_context(|| format!("sweep spec {}", spec.display()))?;
    let factory = env_factory(env)?;
    let rows = analysis::sweep(&tree, &spec, &factory, bins)?;
    let csv = analysis::sweep_csv(&rows);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write(&dir.join("sweep.csv"), &csv)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_budget(path: &Path, baseline: u64) -> Result<()> {
    let cfg = load_config(path)?;
    let report = budget_report(&cfg.evo, &cfg.social, baseline)?;
    print!("{report}");
    println!();
    print!("{}", report.csv());
    Ok(())
}
