//! Parallel benchmark execution with ordered, per-episode persistence.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::report::noise_table_markdown;
use super::{create_dir, io_err, pretty, write_file, HarnessError};
use crate::agent::{AgentError, AgentSpec, OracleAgent, Policy, RemoteConfig};
use crate::bench::{
    episode_seed, generate_task, run_episode, summarize, summary_markdown, CellSummary,
    EpisodeConfig, EpisodeRecord, Level, Suite, TaskSpec,
};

/// Per-scene threshold overrides. `None` keeps the generated values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Joint open threshold applied to every articulated node.
    pub joint: Option<f64>,
    /// Gripper closure threshold.
    pub gripper: Option<f64>,
}

impl Thresholds {
    pub fn apply(&self, task: &mut TaskSpec) {
        let mut raw = crate::scene::RawSceneGraph::from_graph(&task.scene);
        if let Some(j) = self.joint {
            for n in &mut raw.nodes {
                if let Some(a) = &mut n.articulation {
                    a.open_threshold = j;
                }
            }
        }
        if let Some(g) = self.gripper {
            raw.robot.gripper_threshold = g;
        }
        if let Ok(sg) = raw.to_graph() {
            task.scene = sg;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub suites: Vec<Suite>,
    pub levels: Vec<Level>,
    pub seeds: u64,
    pub trials: u32,
    pub noise: Vec<f64>,
    pub agent: AgentSpec,
    pub remote: RemoteConfig,
    pub global_seed: u64,
    pub workers: usize,
    pub episode: EpisodeConfig,
    pub thresholds: Thresholds,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            levels: Level::ALL.to_vec(),
            seeds: 20,
            trials: 10,
            noise: vec![0.0],
            agent: AgentSpec::Oracle,
            remote: RemoteConfig::default(),
            global_seed: 0,
            workers: 1,
            episode: EpisodeConfig::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.suites.is_empty() || self.levels.is_empty() {
            return bad("at least one suite and one level are required");
        }
        if self.seeds == 0 || self.trials == 0 {
            return bad("seeds and trials must be positive");
        }
        if self.noise.is_empty() || self.noise.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("noise ratios must lie in [0, 1]");
        }
        if let Some(j) = self.thresholds.joint {
            if !(j > 0.0 && j < 0.25) {
                return bad("joint threshold must lie in (0, 0.25)");
            }
        }
        if let Some(g) = self.thresholds.gripper {
            if !(g > 0.0 && g < 1.0) {
                return bad("gripper threshold must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

/// One episode to run.
#[derive(Clone, Debug)]
pub struct Unit {
    pub task: usize,
    pub noise: f64,
    pub trial: u32,
}

/// Tasks and the episode grid in output order: task, noise, trial.
pub fn bench_units(cfg: &BenchConfig) -> (Vec<TaskSpec>, Vec<Unit>) {
    let mut tasks = Vec::new();
    for &suite in &cfg.suites {
        for &level in &cfg.levels {
            for seed in 0..cfg.seeds {
                let mut t = generate_task(suite, level, seed);
                cfg.thresholds.apply(&mut t);
                tasks.push(t);
            }
        }
    }
    let mut units = Vec::new();
    for task in 0..tasks.len() {
        for &noise in &cfg.noise {
            for trial in 0..cfg.trials {
                units.push(Unit { task, noise, trial });
            }
        }
    }
    (tasks, units)
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub records: Vec<EpisodeRecord>,
    pub summary: Vec<CellSummary>,
    pub tasks: usize,
}

fn build_policy(cfg: &BenchConfig) -> Box<dyn Policy> {
    match &cfg.agent {
        AgentSpec::Oracle => Box::new(OracleAgent {
            engine: cfg.episode.engine.clone(),
            ..OracleAgent::default()
        }),
        other => other.build(&cfg.remote),
    }
}

/// Runs the grid on `cfg.workers` threads and writes, under `out`:
/// `episodes.jsonl` (flushed after every episode, in grid order),
/// `summary.json`, `summary.md` and `meta.json` (`meta` echoes the
/// effective configuration). On an agent transport failure the finished
/// episodes are kept and an error is returned.
pub fn run_bench(cfg: &BenchConfig, meta: &serde_json::Value, out: &Path) -> Result<BenchOutcome, HarnessError> {
    cfg.validate()?;
    create_dir(out)?;
    let (tasks, units) = bench_units(cfg);
    log::info!("{} tasks, {} episodes", tasks.len(), units.len());

    let episodes_path = out.join("episodes.jsonl");
    let file = File::create(&episodes_path).map_err(io_err(&episodes_path))?;
    let mut writer = BufWriter::new(file);

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<EpisodeRecord, AgentError>)>();
    let workers = cfg.workers.max(1).min(units.len().max(1));

    let mut records: Vec<EpisodeRecord> = Vec::with_capacity(units.len());
    let mut failure: Option<AgentError> = None;
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, abort, tasks, units) = (&next, &abort, &tasks, &units);
            scope.spawn(move || {
                let mut policy = build_policy(cfg);
                loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(u) = units.get(i) else { break };
                    let task = &tasks[u.task];
                    let ep = EpisodeConfig {
                        noise_ratio: u.noise,
                        ..cfg.episode.clone()
                    };
                    let seed = episode_seed(cfg.global_seed, task, u.trial);
                    let r = run_episode(task, policy.as_mut(), &ep, u.trial, seed);
                    let msg = match r.agent_error {
                        Some(e) => {
                            abort.store(true, Ordering::SeqCst);
                            Err(e)
                        }
                        None => Ok(r.record),
                    };
                    if tx.send((i, msg)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        // write in grid order as soon as the next index is available
        let mut pending: BTreeMap<usize, EpisodeRecord> = BTreeMap::new();
        let mut cursor = 0;
        for (i, msg) in rx {
            match msg {
                Ok(rec) => {
                    pending.insert(i, rec);
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
            while let Some(rec) = pending.remove(&cursor) {
                write_record(&mut writer, &rec, &episodes_path)?;
                records.push(rec);
                cursor += 1;
            }
        }
        // after an abort, keep whatever finished beyond the gap
        for (_, rec) in pending {
            write_record(&mut writer, &rec, &episodes_path)?;
            records.push(rec);
        }
        Ok(())
    })?;

    let summary = summarize(&records);
    write_file(&out.join("summary.json"), pretty(&summary)?)?;
    let mut md = summary_markdown(&summary);
    if cfg.noise.len() > 1 {
        md.push('\n');
        md.push_str(&noise_table_markdown(&summary));
    }
    write_file(&out.join("summary.md"), md)?;
    write_file(&out.join("meta.json"), pretty(meta)?)?;

    if let Some(source) = failure {
        return Err(HarnessError::Agent {
            completed: records.len(),
            source,
        });
    }
    Ok(BenchOutcome {
        records,
        summary,
        tasks: tasks.len(),
    })
}

fn write_record(w: &mut BufWriter<File>, rec: &EpisodeRecord, path: &Path) -> Result<(), HarnessError> {
    serde_json::to_writer(&mut *w, rec)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
