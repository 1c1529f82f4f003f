//! `scenebench`: benchmark runs, dataset generation, grading, replay and reports.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use scenebench_core::agent::AgentSpec;
use scenebench_core::bench::{EpisodeConfig, Level, Suite};
use scenebench_core::data::Trajectory;
use scenebench_core::engine::EngineConfig;
use scenebench_core::harness::{self, BenchConfig, DatagenConfig, HarnessError};
use scenebench_core::reward::RewardWeights;

use config::{parse_floats, parse_lambdas, parse_list, FileConfig};

#[derive(Parser, Debug)]
#[command(name = "scenebench", version, about)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, env = "GSR_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run agents on the task grid and write episode records plus summaries.
    Bench(BenchArgs),
    /// Build augmented training files from trajectories.
    Datagen(DatagenArgs),
    /// Append reward fields to logged responses.
    Grade(GradeArgs),
    /// Re-execute trajectories and check every step.
    Replay(ReplayArgs),
    /// Aggregate episode files into tables.
    Report(ReportArgs),
}

/// Geometry thresholds shared by commands that touch the engine.
#[derive(Args, Debug, Default)]
struct EngineArgs {
    /// IoA threshold for `inside`.
    #[arg(long)]
    tau: Option<f64>,
    /// Minimum footprint overlap for `ontop`.
    #[arg(long)]
    overlap: Option<f64>,
    /// Maximum center distance for `beside`, meters.
    #[arg(long)]
    beside: Option<f64>,
}

impl EngineArgs {
    fn apply(&self, e: &mut EngineConfig) {
        if let Some(v) = self.tau {
            e.extraction.inside_threshold = v;
        }
        if let Some(v) = self.overlap {
            e.extraction.overlap_threshold = v;
        }
        if let Some(v) = self.beside {
            e.extraction.beside_distance = v;
        }
    }
}

#[derive(Args, Debug, Default)]
struct SelectArgs {
    /// Suites: `all` or a comma list of sod, sas, gcg.
    #[arg(long)]
    suite: Option<String>,
    /// Levels: `all` or a comma list of easy, general, complex.
    #[arg(long, alias = "levels")]
    level: Option<String>,
    /// Seeds per suite and level.
    #[arg(long)]
    seeds: Option<u64>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long)]
    trials: Option<u32>,
    /// Comma list of noise ratios.
    #[arg(long)]
    noise: Option<String>,
    /// `oracle` or `remote:<tcp://host:port | http(s)://url>`.
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    /// Worker threads (default: available cores).
    #[arg(long, alias = "workers")]
    parallel: Option<usize>,
    /// Hide execution outcomes from the agent's history.
    #[arg(long)]
    no_feedback: bool,
    /// Joint open threshold applied to every articulated object.
    #[arg(long)]
    joint_threshold: Option<f64>,
    /// Gripper closure threshold.
    #[arg(long)]
    gripper_threshold: Option<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DatagenArgs {
    /// Trajectory files (JSON or JSONL). Without any, oracle trajectories
    /// are recorded over the selected tasks.
    #[arg(long = "trajectories", num_args = 1..)]
    trajectories: Vec<PathBuf>,
    #[command(flatten)]
    select: SelectArgs,
    /// Service that rephrases instructions; templates are used otherwise.
    #[arg(long)]
    rephraser_url: Option<String>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradeArgs {
    /// Newline-delimited `{response, scene_graph, goal}` records.
    input: PathBuf,
    /// `λ_s,λ_g,λ_t`.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value = "graded.jsonl")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Trajectory file (JSON or JSONL).
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the step dump here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Episode files, or result directories containing `episodes.jsonl`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (file, source) = FileConfig::resolve(cli.config.as_ref())?;
    let source = source.map(|p| p.display().to_string());
    match cli.command {
        Command::Bench(a) => bench(a, file, source),
        Command::Datagen(a) => datagen(a, file, source),
        Command::Grade(a) => grade(a, file),
        Command::Replay(a) => replay(a, file),
        Command::Report(a) => report(a),
    }
}

fn selection(s: &SelectArgs, suites: &mut Vec<Suite>, levels: &mut Vec<Level>, seeds: &mut u64, seed: &mut u64) -> Result<()> {
    if let Some(v) = &s.suite {
        *suites = parse_list(v, &Suite::ALL)?;
    }
    if let Some(v) = &s.level {
        *levels = parse_list(v, &Level::ALL)?;
    }
    if let Some(v) = s.seeds {
        *seeds = v;
    }
    if let Some(v) = s.seed {
        *seed = v;
    }
    Ok(())
}

fn bench(a: BenchArgs, file: FileConfig, source: Option<String>) -> Result<ExitCode> {
    let mut b = file.bench;
    selection(&a.select, &mut b.suites, &mut b.levels, &mut b.seeds, &mut b.seed)?;
    if let Some(v) = a.trials {
        b.trials = v;
    }
    if let Some(v) = &a.noise {
        b.noise = parse_floats(v)?;
    }
    if let Some(v) = &a.agent {
        b.agent = v.parse::<AgentSpec>()?;
    }
    if let Some(v) = a.parallel {
        b.parallel = v;
    }
    if a.no_feedback {
        b.feedback = false;
    }
    let mut remote = file.remote;
    if let Some(v) = a.timeout_ms {
        remote.timeout_ms = v;
    }
    if let Some(v) = a.retries {
        remote.retries = v;
    }
    let mut engine = file.engine;
    a.engine.apply(&mut engine);
    let mut thresholds = file.thresholds;
    if a.joint_threshold.is_some() {
        thresholds.joint = a.joint_threshold;
    }
    if a.gripper_threshold.is_some() {
        thresholds.gripper = a.gripper_threshold;
    }
    let workers = match b.parallel {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    let cfg = BenchConfig {
        suites: b.suites,
        levels: b.levels,
        seeds: b.seeds,
        trials: b.trials,
        noise: b.noise,
        agent: b.agent,
        remote,
        global_seed: b.seed,
        workers,
        episode: EpisodeConfig {
            noise_ratio: 0.0,
            flip_mode: b.flip_mode,
            noise_per_episode: b.noise_per_episode,
            feedback: b.feedback,
            engine: engine.clone(),
        },
        thresholds,
    };
    // worker count does not affect results, so it is left out of the echo
    let meta = json!({
        "command": "bench",
        "version": env!("CARGO_PKG_VERSION"),
        "config_file": source,
        "suites": cfg.suites,
        "levels": cfg.levels,
        "seeds": cfg.seeds,
        "trials": cfg.trials,
        "noise": cfg.noise,
        "agent": cfg.agent,
        "remote": cfg.remote,
        "seed": cfg.global_seed,
        "episode": cfg.episode,
        "engine": engine,
        "thresholds": cfg.thresholds,
    });
    match harness::run_bench(&cfg, &meta, &a.out) {
        Ok(outcome) => {
            println!(
                "{} tasks, {} episodes -> {}",
                outcome.tasks,
                outcome.records.len(),
                a.out.display()
            );
            print!("{}", scenebench_core::bench::summary_markdown(&outcome.summary));
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ HarnessError::Agent { .. }) => {
            eprintln!("error: {e}; partial results kept in {}", a.out.display());
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn datagen(a: DatagenArgs, file: FileConfig, source: Option<String>) -> Result<ExitCode> {
    let d = file.datagen;
    let mut cfg = DatagenConfig {
        trajectories: a.trajectories,
        suites: file.bench.suites,
        levels: file.bench.levels,
        seeds: file.bench.seeds,
        max_actions: d.max_actions,
        horizons: d.horizons,
        plan: d.plan,
        rephraser_url: a.rephraser_url.or(d.rephraser_url),
        engine: file.engine,
    };
    let mut seed = cfg.plan.seed;
    selection(&a.select, &mut cfg.suites, &mut cfg.levels, &mut cfg.seeds, &mut seed)?;
    cfg.plan.seed = seed;
    a.engine.apply(&mut cfg.engine);
    let outcome = harness::run_datagen(&cfg, &a.out)?;
    let meta = json!({
        "command": "datagen",
        "version": env!("CARGO_PKG_VERSION"),
        "config_file": source,
        "config": cfg,
        "engine": cfg.engine,
        "trajectories_used": outcome.trajectories,
    });
    std::fs::write(a.out.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")
        .context("writing meta.json")?;
    print!("{}", scenebench_core::data::audit_table(&outcome.audit));
    Ok(ExitCode::SUCCESS)
}

fn grade(a: GradeArgs, file: FileConfig) -> Result<ExitCode> {
    let mut w: RewardWeights = file.reward;
    if let Some(v) = &a.weights {
        let [s, g, t] = parse_lambdas(v)?;
        w.lambda_step = s;
        w.lambda_grounding = g;
        w.lambda_termination = t;
    }
    if let Some(v) = a.alpha {
        w.alpha = v;
    }
    if let Some(v) = a.beta {
        w.beta = v;
    }
    let outcome = harness::grade_file(&a.input, &a.out, &w)?;
    for (line, msg) in &outcome.errors {
        eprintln!("{}:{line}: {msg}", a.input.display());
    }
    println!("graded {} record(s) -> {}", outcome.graded, a.out.display());
    Ok(if outcome.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn replay(a: ReplayArgs, file: FileConfig) -> Result<ExitCode> {
    let mut engine = file.engine;
    a.engine.apply(&mut engine);
    let trajs = Trajectory::read_all(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let mut dump = String::new();
    for t in &trajs {
        for step in harness::replay_trajectory(t, &engine)? {
            let line = json!({ "trajectory": t.id, "step": step });
            dump.push_str(&serde_json::to_string(&line)?);
            dump.push('\n');
        }
    }
    match &a.out {
        Some(p) => std::fs::write(p, &dump).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{dump}"),
    }
    eprintln!("{} trajectory(ies) replayed without divergence", trajs.len());
    Ok(ExitCode::SUCCESS)
}

fn episode_file(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("episodes.jsonl")
    } else {
        p.to_path_buf()
    }
}

fn report(a: ReportArgs) -> Result<ExitCode> {
    let inputs: Vec<PathBuf> = a.inputs.iter().map(|p| episode_file(p)).collect();
    let outcome = harness::run_report(&inputs, &a.out)?;
    println!(
        "{} episode(s), {} cell(s) -> {}",
        outcome.episodes,
        outcome.cells.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
