//! Training-data synthesis: trajectories to per-modality samples, cleaning,
//! and multiplicative augmentation with a count audit.

mod augment;
mod clean;
mod rephrase;
mod samples;
mod swap;
mod trajectory;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::scene::SceneError;

pub use augment::{
    audit_rows, audit_table, augment, augment_into, AugmentStats, AugmentationPlan, AuditRow,
};
pub use clean::{clean, describe};
pub use rephrase::{HttpRephraser, Rephraser, TemplateRephraser};
pub use samples::{
    forward_reasoning_samples, goal_interpretation_samples, goal_planning_samples,
    grounding_samples, planning_family, world_modeling_samples, DEFAULT_HORIZONS,
};
pub use swap::{SwapMap, SynonymTable};
pub use trajectory::{Trajectory, TrajectoryStep};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("trajectory `{0}` has no instruction")]
    NoInstruction(String),
    #[error("trajectory `{0}` has no steps")]
    EmptyTrajectory(String),
    #[error("record does not match the {0} schema: {1}")]
    Schema(Modality, String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("rephraser failed: {0}")]
    Rephrase(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Grounding,
    WorldModeling,
    ForwardReasoning,
    GoalPlanning,
    GoalInterpretation,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::Grounding,
        Modality::WorldModeling,
        Modality::ForwardReasoning,
        Modality::GoalPlanning,
        Modality::GoalInterpretation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Grounding => "grounding",
            Modality::WorldModeling => "world_modeling",
            Modality::ForwardReasoning => "forward_reasoning",
            Modality::GoalPlanning => "goal_planning",
            Modality::GoalInterpretation => "goal_interpretation",
        }
    }

    /// Exact (input, output) field names.
    pub fn schema(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Modality::Grounding => (&["description"], &["scene_graph"]),
            Modality::WorldModeling => (&["action", "instruction", "scene_graph"], &["delta"]),
            Modality::ForwardReasoning => (
                &["instruction", "scene_graph", "target_scene_graph"],
                &["actions"],
            ),
            Modality::GoalPlanning => (&["instruction", "scene_graph"], &["action"]),
            Modality::GoalInterpretation => (&["instruction", "scene_graph"], &["goal_scene_graph"]),
        }
    }

    /// Graph-valued fields that shuffling reorders.
    pub(crate) fn shuffled_fields(self) -> &'static [(Side, &'static str)] {
        match self {
            Modality::Grounding => &[(Side::Output, "scene_graph")],
            Modality::ForwardReasoning => &[
                (Side::Input, "scene_graph"),
                (Side::Input, "target_scene_graph"),
            ],
            _ => &[(Side::Input, "scene_graph")],
        }
    }

    /// The free-text field that rephrasing rewrites.
    pub(crate) fn text_field(self) -> &'static str {
        match self {
            Modality::Grounding => "description",
            _ => "instruction",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Input,
    Output,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub trajectory_id: String,
    pub step: usize,
    pub horizon: usize,
    #[serde(default)]
    pub augmentation: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub modality: Modality,
    pub input: Map<String, Value>,
    pub output: Map<String, Value>,
    pub meta: RecordMeta,
}

impl DataRecord {
    pub fn validate(&self) -> Result<(), DataError> {
        let (inp, out) = self.modality.schema();
        let keys = |m: &Map<String, Value>| m.keys().cloned().collect::<Vec<_>>();
        let want = |s: &[&str]| {
            let mut v: Vec<String> = s.iter().map(|x| x.to_string()).collect();
            v.sort();
            v
        };
        if keys(&self.input) != want(inp) {
            return Err(DataError::Schema(self.modality, format!("input fields {:?}", keys(&self.input))));
        }
        if keys(&self.output) != want(out) {
            return Err(DataError::Schema(self.modality, format!("output fields {:?}", keys(&self.output))));
        }
        Ok(())
    }

    pub(crate) fn side_mut(&mut self, side: Side) -> &mut Map<String, Value> {
        match side {
            Side::Input => &mut self.input,
            Side::Output => &mut self.output,
        }
    }

    /// Audit bucket: multi-step forward records are reported separately.
    pub fn audit_key(&self) -> &'static str {
        match self.modality {
            Modality::ForwardReasoning if self.meta.horizon > 1 => "forward_reasoning_multi",
            m => m.as_str(),
        }
    }
}
