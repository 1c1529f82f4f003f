//! The closed-loop evaluation episode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::task_progress;
use super::noise::{perturb_with, FlipMode};
use super::task::{derive_seed, Level, Suite, TaskSpec};
use crate::agent::{AgentError, HistoryEntry, Policy, PolicyQuery};
use crate::engine::{execute_with, satisfied, EngineConfig, Verdict};
use crate::reward::parse_actions;
use crate::scene::{self, Format, SceneGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    pub noise_ratio: f64,
    pub flip_mode: FlipMode,
    /// Draw one perturbation stream per episode instead of a fresh draw per step.
    pub noise_per_episode: bool,
    /// Include execution outcomes in the history shown to the agent.
    pub feedback: bool,
    #[serde(skip)]
    pub engine: EngineConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            noise_ratio: 0.0,
            flip_mode: FlipMode::Predicate,
            noise_per_episode: false,
            feedback: true,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AgentEnd,
    BudgetExhausted,
    AgentError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionLog {
    /// The executed command, or the raw reply when nothing parsed.
    pub command: String,
    pub sigma: bool,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub suite: Suite,
    pub level: Level,
    pub seed: u64,
    pub trial: u32,
    pub noise_ratio: f64,
    pub agent_id: String,
    pub success: bool,
    pub task_progress: f64,
    pub steps_used: usize,
    pub termination: Termination,
    pub actions: Vec<ActionLog>,
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub record: EpisodeRecord,
    /// True states: the initial scene, then one entry per executed command.
    pub states: Vec<SceneGraph>,
    /// Set when the episode aborted on a transport failure.
    pub agent_error: Option<AgentError>,
}

/// Noise stream for one episode; independent of the noise ratio so that
/// runs at different ratios share random numbers.
pub fn episode_seed(global: u64, task: &TaskSpec, trial: u32) -> u64 {
    derive_seed(&[global, task.suite.tag(), task.level.tag(), task.seed, trial as u64])
}

pub fn run_episode(
    task: &TaskSpec,
    agent: &mut dyn Policy,
    cfg: &EpisodeConfig,
    trial: u32,
    rng_seed: u64,
) -> EpisodeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sg = task.scene.clone();
    let mut states = vec![sg.clone()];
    let mut actions: Vec<ActionLog> = Vec::new();
    let mut history: Vec<HistoryEntry> = Vec::new();
    let budget = task.step_budget as usize;
    let mut termination = Termination::BudgetExhausted;
    let mut agent_error = None;

    while actions.len() < budget {
        if cfg.noise_per_episode {
            rng = ChaCha8Rng::seed_from_u64(rng_seed);
        }
        let observed = perturb_with(&sg, cfg.noise_ratio, cfg.flip_mode, &mut rng);
        let query = PolicyQuery {
            observation: scene::serialize(&observed, Format::Structured),
            instruction: task.instruction.clone(),
            history: history.clone(),
            step: history.len(),
            budget,
            feedback: cfg.feedback,
        };
        let reply = match agent.respond(&query, &task.goal) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{} trial {trial}: {e}", task.key());
                termination = Termination::AgentError;
                agent_error = Some(e);
                break;
            }
        };
        let (parsed, _) = parse_actions(&reply.text);
        let Some(cmd) = parsed.into_iter().next() else {
            actions.push(ActionLog {
                command: reply.text.clone(),
                sigma: false,
                verdicts: Vec::new(),
                error: Some("unparseable response".into()),
            });
            history.push(HistoryEntry {
                command: reply.text,
                success: false,
            });
            continue;
        };
        if cmd.is_end() {
            actions.push(ActionLog {
                command: cmd.to_string(),
                sigma: true,
                verdicts: Vec::new(),
                error: None,
            });
            termination = Termination::AgentEnd;
            break;
        }
        let result = execute_with(&sg, &cmd, &cfg.engine);
        actions.push(ActionLog {
            command: cmd.to_string(),
            sigma: result.success,
            verdicts: result.log.iter().map(|s| s.verdict).collect(),
            error: None,
        });
        history.push(HistoryEntry {
            command: cmd.to_string(),
            success: result.success,
        });
        sg = result.graph;
        states.push(sg.clone());
    }

    let task_progress = task_progress(&sg, &task.goal);
    let success = satisfied(&sg, &task.goal).unwrap_or(false);
    EpisodeResult {
        record: EpisodeRecord {
            suite: task.suite,
            level: task.level,
            seed: task.seed,
            trial,
            noise_ratio: cfg.noise_ratio,
            agent_id: agent.id(),
            success,
            task_progress,
            steps_used: actions.len(),
            termination,
            actions,
        },
        states,
        agent_error,
    }
}
