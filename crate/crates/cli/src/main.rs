//! `arena`: suite listing, training, the filter pipeline, evaluation runs,
//! reports and interactive play.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use arena_core::agents::{
    echo, AgentRecipe, AgentSpec, CheckpointRef, ExternalConfig, HumanAgent, PolicyMode, Recipe,
};
use arena_core::config::RunConfig;
use arena_core::env::Seat;
use arena_core::filters::{checkpoint_label, execution_filter, OpponentSelection, DEFAULT_EXECUTION_GAMES};
use arena_core::harness::{play_match_observed, run_eval, MatchOutcome, MatchRecord, Side};
use arena_core::pipeline::{
    capped_env, effective_move_cap, read_selections, run_pipeline, summary, to_jsonl, train_game, write_file,
};
use arena_core::rl::checkpoint::{self, checkpoint_path};
use arena_core::rng::seed_for_label;
use arena_core::stats::{aggregate, render_table, GameReport};
use arena_core::suite::{self, load_suite, SuiteEntry};

#[derive(Parser)]
#[command(name = "arena", version, about = "Two-player game benchmark: train opponents, filter games, evaluate agents")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Suite directory (one subdirectory per game)
    #[arg(long, global = true)]
    suite: Option<PathBuf>,
    /// Output directory for checkpoints, pipeline results and runs
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `paper` or `desk`
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Rollouts per move for MCTS agents
    #[arg(long, global = true)]
    rollouts: Option<usize>,
    /// Matches per game in `eval`
    #[arg(long, global = true)]
    matches: Option<usize>,
    /// Games processed at once
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// `key = value` configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Any other configuration key, e.g. `--set learning_rate=0.001`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the suite
    Games {
        #[command(subcommand)]
        action: GamesCommand,
    },
    /// Train the self-play checkpoints of one game
    Train { game: String },
    /// Run the filters and opponent selection over the whole suite
    Pipeline,
    /// Evaluate an agent against the selected opponents
    Eval {
        /// Game id or `all`
        game: String,
        /// random | policy:<ckpt> | mcts:<ckpt> | external:<command>
        #[arg(long)]
        agent: String,
    },
    /// Play a game at the console
    Play {
        game: String,
        /// Opponent agent (same forms as `eval --agent`)
        #[arg(long, default_value = "random")]
        vs: String,
        /// Let the opponent move first
        #[arg(long)]
        second: bool,
    },
    /// Print the table and failure breakdown of a finished run
    Report { dir: PathBuf },
    /// Scripted protocol agent used in tests
    #[command(hide = true)]
    EchoAgent {
        #[arg(default_value = "first")]
        mode: String,
    },
}

#[derive(Subcommand)]
enum GamesCommand {
    List,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::EchoAgent { mode } = &cli.command {
        let mode = echo::EchoMode::parse(mode).ok_or_else(|| anyhow!("unknown echo mode `{mode}`"))?;
        return Ok(echo::run(mode, io::stdin().lock(), io::stdout().lock())?);
    }
    let cfg = load_config(&cli.opts)?;
    match cli.command {
        Command::Games { action: GamesCommand::List } => cmd_games_list(&cfg),
        Command::Train { game } => cmd_train(&cfg, &game),
        Command::Pipeline => cmd_pipeline(&cfg),
        Command::Eval { game, agent } => cmd_eval(&cfg, &game, &agent),
        Command::Play { game, vs, second } => cmd_play(&cfg, &game, &vs, second),
        Command::Report { dir } => cmd_report(&dir),
        Command::EchoAgent { .. } => unreachable!("handled above"),
    }
}

fn load_config(opts: &GlobalOpts) -> Result<RunConfig> {
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut flag = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((k.to_string(), v));
        }
    };
    flag("suite", opts.suite.as_ref().map(|p| p.display().to_string()));
    flag("out", opts.out.as_ref().map(|p| p.display().to_string()));
    flag("seed", opts.seed.map(|s| s.to_string()));
    flag("profile", opts.profile.clone());
    flag("mcts_rollouts", opts.rollouts.map(|s| s.to_string()));
    flag("n_eval_matches", opts.matches.map(|s| s.to_string()));
    flag("parallel", opts.parallel.map(|s| s.to_string()));
    for kv in &opts.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let text = match &opts.config {
        Some(path) => Some(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };
    let file = opts.config.as_deref().zip(text.as_deref());
    Ok(RunConfig::layered(file, &overrides)?)
}

fn find_entry(cfg: &RunConfig, id: &str) -> Result<SuiteEntry> {
    load_suite(&cfg.suite)?
        .into_iter()
        .find(|e| e.meta.id == id)
        .ok_or_else(|| anyhow!("unknown game id `{id}` in suite {}", cfg.suite.display()))
}

fn cmd_games_list(cfg: &RunConfig) -> Result<()> {
    let entries = load_suite(&cfg.suite)?;
    if entries.is_empty() {
        return Ok(());
    }
    let w_id = entries.iter().map(|e| e.meta.id.len()).max().unwrap_or(2).max(2);
    let w_title = entries.iter().map(|e| e.meta.title.len()).max().unwrap_or(5).max(5);
    println!("{:<w_id$}  {:<w_title$}  {:>7}  {:>7}", "id", "title", "actions", "obs_dim");
    for e in &entries {
        println!(
            "{:<w_id$}  {:<w_title$}  {:>7}  {:>7}",
            e.meta.id, e.meta.title, e.meta.action_space_size, e.meta.observation_dim
        );
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig, id: &str) -> Result<()> {
    let entry = find_entry(cfg, id)?;
    let make_env = || suite::instantiate(id, None).map_err(|e| e.to_string());
    let report = execution_filter(
        id,
        entry.meta.observation_dim,
        &make_env,
        DEFAULT_EXECUTION_GAMES,
        effective_move_cap(&entry, cfg),
        seed_for_label(cfg.seed, &format!("{id}/execution")),
    );
    if !report.passed {
        bail!("execution filter failed: {}", serde_json::to_string(&report)?);
    }
    write_file(&cfg.out.join("checkpoints").join(id).join("config.txt"), cfg.to_text())?;
    let pool = train_game(&entry, cfg, &mut |line| println!("{line}"))?;
    for c in &pool.checkpoints {
        println!("wrote {}", checkpoint_path(&cfg.out, id, c.timestep).display());
    }
    if pool.truncation_rate() > arena_core::rl::train::TRUNCATION_FLAG_RATE {
        eprintln!(
            "warning: {:.1}% of training episodes hit the move cap",
            100.0 * pool.truncation_rate()
        );
    }
    Ok(())
}

fn cmd_pipeline(cfg: &RunConfig) -> Result<()> {
    let entries = load_suite(&cfg.suite)?;
    write_file(&cfg.out.join("pipeline").join("config.txt"), cfg.to_text())?;
    let results = run_pipeline(&entries, cfg, &|r| {
        let status = match r.failed_stage() {
            None if r.eligible() => "eligible".to_string(),
            None => "incomplete".to_string(),
            Some(stage) => format!("rejected at {}", stage.name()),
        };
        eprintln!("{}: {status}", r.game_id);
    })?;
    print!("{}", summary(&results));
    println!("reports written to {}", cfg.out.join("pipeline").display());
    Ok(())
}

fn load_params(path: &Path, entry: &SuiteEntry) -> Result<Arc<arena_core::rl::PolicyParams<f32>>> {
    let (header, params) = checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    if header.obs_dim != entry.meta.observation_dim || header.n_actions != entry.meta.action_space_size {
        bail!("{} was trained for {}, not {}", path.display(), header.game_id, entry.meta.id);
    }
    Ok(Arc::new(params))
}

/// Turn an agent selector into a recipe for one game.
fn resolve_agent(
    cfg: &RunConfig,
    spec: &AgentSpec,
    entry: &SuiteEntry,
    selection: Option<&OpponentSelection>,
) -> Result<AgentRecipe> {
    let ckpt = |r: &CheckpointRef| -> Result<(PathBuf, String)> {
        let timestep = match r {
            CheckpointRef::Path(p) => return Ok((p.clone(), p.display().to_string())),
            CheckpointRef::Dominating => selection.map(|s| s.dominating_checkpoint),
            CheckpointRef::Opponent => selection.map(|s| s.opponent_checkpoint),
        }
        .ok_or_else(|| anyhow!("no selected opponent for {}; run `arena pipeline` first", entry.meta.id))?;
        Ok((checkpoint_path(&cfg.out, &entry.meta.id, timestep), checkpoint_label(timestep)))
    };
    Ok(match spec {
        AgentSpec::Random => AgentRecipe::random(),
        AgentSpec::Policy(r) => {
            let (path, label) = ckpt(r)?;
            AgentRecipe {
                label: format!("policy:{label}"),
                recipe: Recipe::Policy {
                    params: load_params(&path, entry)?,
                    mode: PolicyMode::Greedy,
                },
            }
        }
        AgentSpec::Mcts(r) => {
            let (path, label) = ckpt(r)?;
            AgentRecipe {
                label: format!("mcts:{label}"),
                recipe: Recipe::Mcts {
                    params: load_params(&path, entry)?,
                    rollouts: cfg.mcts_rollouts,
                },
            }
        }
        AgentSpec::External(command) => AgentRecipe {
            label: format!("external:{command}"),
            recipe: Recipe::External(ExternalConfig {
                command: command.clone(),
                move_timeout: cfg.move_timeout(),
                max_reprompts: cfg.max_reprompts,
            }),
        },
    })
}

fn opponent_recipe(cfg: &RunConfig, entry: &SuiteEntry, sel: &OpponentSelection) -> Result<AgentRecipe> {
    let path = checkpoint_path(&cfg.out, &entry.meta.id, sel.opponent_checkpoint);
    Ok(AgentRecipe {
        label: format!("opponent:{}", checkpoint_label(sel.opponent_checkpoint)),
        recipe: Recipe::Mcts {
            params: load_params(&path, entry)?,
            rollouts: cfg.mcts_rollouts,
        },
    })
}

#[derive(Serialize)]
struct AggregateLine {
    aggregate: AggregateFields,
}

#[derive(Serialize)]
struct AggregateFields {
    games: usize,
    mean_winrate: Option<f64>,
    ci95_halfwidth: Option<f64>,
}

fn new_run_dir(out: &Path) -> Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S").to_string();
    let base = out.join("runs");
    let mut dir = base.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = base.join(format!("{stamp}-{n}"));
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn cmd_eval(cfg: &RunConfig, target: &str, agent: &str) -> Result<()> {
    let spec: AgentSpec = agent.parse().map_err(|e: String| anyhow!(e))?;
    let entries = load_suite(&cfg.suite)?;
    let selections: BTreeMap<String, OpponentSelection> = read_selections(&cfg.out)
        .with_context(|| "no pipeline results found; run `arena pipeline` first")?;
    let games: Vec<&SuiteEntry> = if target == "all" {
        entries.iter().filter(|e| selections.contains_key(&e.meta.id)).collect()
    } else {
        let e = entries
            .iter()
            .find(|e| e.meta.id == target)
            .ok_or_else(|| anyhow!("unknown game id `{target}` in suite {}", cfg.suite.display()))?;
        if !selections.contains_key(target) {
            bail!("{target} has no selected benchmark opponent (rejected by the pipeline)");
        }
        vec![e]
    };
    if games.is_empty() {
        bail!("no eligible games in {}", cfg.out.join("pipeline").display());
    }
    let jobs: Vec<(&SuiteEntry, AgentRecipe, AgentRecipe)> = games
        .iter()
        .map(|e| {
            let sel = &selections[&e.meta.id];
            Ok((*e, resolve_agent(cfg, &spec, e, Some(sel))?, opponent_recipe(cfg, e, sel)?))
        })
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.parallel).build()?;
    let results: Vec<(Vec<MatchRecord>, GameReport)> = pool.install(|| {
        jobs.par_iter()
            .map(|(entry, agent, opponent)| {
                let mut env = capped_env(entry, cfg, None).map_err(|e| anyhow!(e))?;
                Ok(run_eval(env.as_mut(), agent, opponent, cfg.n_eval_matches, cfg.seed))
            })
            .collect::<Result<_>>()
    })?;
    let dir = new_run_dir(&cfg.out)?;
    let records: Vec<MatchRecord> = results.iter().flat_map(|(m, _)| m.clone()).collect();
    let reports: Vec<GameReport> = results.into_iter().map(|(_, r)| r).collect();
    write_run(&dir, cfg, &records, &reports)?;
    print!("{}", render_table(&reports));
    println!("run written to {}", dir.display());
    Ok(())
}

fn write_run(dir: &Path, cfg: &RunConfig, records: &[MatchRecord], reports: &[GameReport]) -> Result<()> {
    let winrates: Vec<f64> = reports.iter().filter_map(|r| r.winrate).collect();
    let agg = aggregate(&winrates);
    let line = AggregateLine {
        aggregate: AggregateFields {
            games: winrates.len(),
            mean_winrate: agg.map(|a| a.0),
            ci95_halfwidth: agg.and_then(|a| a.1),
        },
    };
    let mut report = to_jsonl(reports);
    report.push_str(&to_jsonl(&[line]));
    write_file(&dir.join("matches.jsonl"), to_jsonl(records))?;
    write_file(&dir.join("report.jsonl"), report)?;
    write_file(&dir.join("report.txt"), render_table(reports))?;
    write_file(&dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}

fn cmd_play(cfg: &RunConfig, id: &str, vs: &str, second: bool) -> Result<()> {
    let entry = find_entry(cfg, id)?;
    let spec: AgentSpec = vs.parse().map_err(|e: String| anyhow!(e))?;
    let needs_selection = matches!(
        &spec,
        AgentSpec::Policy(CheckpointRef::Dominating | CheckpointRef::Opponent)
            | AgentSpec::Mcts(CheckpointRef::Dominating | CheckpointRef::Opponent)
    );
    let selection = if needs_selection {
        read_selections(&cfg.out)?.remove(id)
    } else {
        None
    };
    let recipe = resolve_agent(cfg, &spec, &entry, selection.as_ref())?;
    let mut env = capped_env(&entry, cfg, None).map_err(|e| anyhow!(e))?;
    let seed = seed_for_label(cfg.seed, &format!("{id}/play"));
    let mut opponent = recipe.build(seed);
    let mut human = HumanAgent::new(BufReader::new(io::stdin()), io::stdout());
    let first = if second { Side::B } else { Side::A };
    let human_seat = if second { Seat::P2 } else { Seat::P1 };
    println!("You are {human_seat}; your opponent is {}.", recipe.label);
    let record = play_match_observed(env.as_mut(), &mut human, opponent.as_mut(), first, seed, &mut |seat, d, env| {
        if seat != human_seat {
            let mut line = format!("{} plays {}: {}", recipe.label, d.action, env.describe_action(d.action));
            if let Some(note) = &d.note {
                line.push_str(&format!("  [{note}]"));
            }
            println!("{line}");
        }
        if env.is_done() {
            println!("\n{}", env.render());
        }
    });
    let message = match record.outcome {
        MatchOutcome::WinA => "You win!".to_string(),
        MatchOutcome::WinB => "You lose.".to_string(),
        MatchOutcome::Draw => "Draw: the move cap was reached.".to_string(),
        MatchOutcome::FaultB => format!("Your opponent forfeited: {}", record.detail.unwrap_or_default()),
        MatchOutcome::FaultA | MatchOutcome::EnvError => {
            format!("Game aborted: {}", record.detail.unwrap_or_default())
        }
    };
    println!("{message}");
    io::stdout().flush()?;
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let path = dir.join("matches.jsonl");
    let file = fs::File::open(&path).with_context(|| format!("missing match log {}", path.display()))?;
    let mut groups: Vec<((String, String, String), Vec<MatchRecord>)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MatchRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad match record", path.display(), i + 1))?;
        let key = (rec.game_id.clone(), rec.agent_a.clone(), rec.agent_b.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(rec),
            None => groups.push((key, vec![rec])),
        }
    }
    if groups.is_empty() {
        println!("no matches in {}", path.display());
        return Ok(());
    }
    let reports: Vec<GameReport> = groups
        .iter()
        .map(|((g, a, b), recs)| GameReport::from_records(g, a, b, recs))
        .collect();
    print!("{}", render_table(&reports));
    Ok(())
}
