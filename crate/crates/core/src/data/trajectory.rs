//! Recorded state-action sequences and their file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::agent::OracleAgent;
use crate::bench::TaskSpec;
use crate::engine::{execute_with, transition_with, ActionCommand, EngineConfig};
use crate::scene::SceneGraph;

pub const ENGINE_PROVENANCE: &str = "engine";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub scene_graph: SceneGraph,
    pub action: ActionCommand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    #[serde(default)]
    pub instruction: String,
    pub steps: Vec<TrajectoryStep>,
    pub final_scene_graph: SceneGraph,
    #[serde(default = "external")]
    pub provenance: String,
}

fn external() -> String {
    "external".into()
}

impl Trajectory {
    /// Executes `commands` from `initial`, then appends `end`.
    pub fn from_commands(
        id: impl Into<String>,
        instruction: impl Into<String>,
        initial: &SceneGraph,
        commands: &[ActionCommand],
        cfg: &EngineConfig,
    ) -> Self {
        let mut sg = initial.clone();
        let mut steps = Vec::with_capacity(commands.len() + 1);
        for cmd in commands.iter().filter(|c| !c.is_end()) {
            let next = execute_with(&sg, cmd, cfg).graph;
            steps.push(TrajectoryStep {
                scene_graph: sg,
                action: cmd.clone(),
            });
            sg = next;
        }
        steps.push(TrajectoryStep {
            scene_graph: sg.clone(),
            action: ActionCommand::end(),
        });
        Self {
            id: id.into(),
            instruction: instruction.into(),
            steps,
            final_scene_graph: sg,
            provenance: ENGINE_PROVENANCE.into(),
        }
    }

    /// Lets the oracle act on the true state for at most `max_actions`
    /// commands (the closing `end` excluded).
    pub fn record_oracle(id: impl Into<String>, task: &TaskSpec, max_actions: usize) -> Self {
        let oracle = OracleAgent::default();
        let mut sg = task.scene.clone();
        let mut commands = Vec::new();
        while commands.len() < max_actions {
            let cmd = oracle.next_action(&sg, &task.goal);
            if cmd.is_end() {
                break;
            }
            sg = execute_with(&sg, &cmd, &oracle.engine).graph;
            commands.push(cmd);
        }
        Self::from_commands(id, task.instruction.clone(), &task.scene, &commands, &oracle.engine)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The graph after step `t` (`t + 1`'s input, or the final graph).
    pub fn state_after(&self, t: usize) -> &SceneGraph {
        self.steps
            .get(t + 1)
            .map_or(&self.final_scene_graph, |s| &s.scene_graph)
    }

    pub fn goal_text(&self) -> Result<&str, DataError> {
        if self.instruction.trim().is_empty() {
            Err(DataError::NoInstruction(self.id.clone()))
        } else {
            Ok(&self.instruction)
        }
    }

    /// Whether step `t` reproduces under the engine. `end` and blocked
    /// commands must leave the graph unchanged.
    pub fn step_is_consistent(&self, t: usize, cfg: &EngineConfig) -> bool {
        let step = &self.steps[t];
        let after = self.state_after(t);
        let expected = if step.action.is_end() {
            step.scene_graph.clone()
        } else {
            match transition_with(&step.scene_graph, &step.action, cfg) {
                Ok(g) => g,
                Err(_) => step.scene_graph.clone(),
            }
        };
        expected.relationally_equal(after)
    }

    /// Indices of steps that do not reproduce.
    pub fn inconsistent_steps(&self, cfg: &EngineConfig) -> Vec<usize> {
        (0..self.steps.len())
            .filter(|&t| !self.step_is_consistent(t, cfg))
            .collect()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.steps.is_empty() {
            return Err(DataError::EmptyTrajectory(self.id.clone()));
        }
        Ok(())
    }

    /// Reads one document, or newline-delimited documents.
    pub fn read_all(path: &Path) -> Result<Vec<Trajectory>, DataError> {
        let text = std::fs::read_to_string(path)?;
        if let Ok(one) = serde_json::from_str::<Trajectory>(&text) {
            return Ok(vec![one]);
        }
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let t: Trajectory = serde_json::from_str(line).map_err(|e| DataError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            t.validate().map_err(|e| DataError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(t);
        }
        Ok(out)
    }
}
