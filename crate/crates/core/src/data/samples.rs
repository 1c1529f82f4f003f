//! Per-modality sample extraction from trajectories.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use super::clean::describe;
use super::trajectory::Trajectory;
use super::{DataError, DataRecord, Modality, RecordMeta};
use crate::engine::EngineConfig;
use crate::scene::{diff, serialize, Format, SceneGraph};

/// Forward-reasoning horizons; `0` stands for the full trajectory from t = 0.
pub const DEFAULT_HORIZONS: [usize; 4] = [1, 2, 3, 0];

fn record(modality: Modality, input: Value, output: Value, id: &str, step: usize, horizon: usize) -> DataRecord {
    let obj = |v: Value| match v {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    DataRecord {
        modality,
        input: obj(input),
        output: obj(output),
        meta: RecordMeta {
            trajectory_id: id.to_string(),
            step,
            horizon,
            augmentation: Vec::new(),
        },
    }
}

/// Graphs travel as structured text, the form a text model consumes.
fn graph_text(sg: &SceneGraph) -> String {
    serialize(sg, Format::Structured)
}

/// One text-to-graph pair per distinct graph, in first-seen order.
pub fn grounding_samples(trajs: &[Trajectory]) -> Vec<DataRecord> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in trajs {
        let graphs = t
            .steps
            .iter()
            .map(|s| &s.scene_graph)
            .chain([&t.final_scene_graph]);
        for (i, sg) in graphs.enumerate() {
            if seen.insert(serde_json::to_string(sg).expect("graph serializes")) {
                out.push(grounding_record(sg, &t.id, i));
            }
        }
    }
    out
}

pub(crate) fn grounding_record(sg: &SceneGraph, id: &str, step: usize) -> DataRecord {
    record(
        Modality::Grounding,
        json!({ "description": describe(sg) }),
        json!({ "scene_graph": graph_text(sg) }),
        id,
        step,
        0,
    )
}

/// `(SG_t, A_t) → ΔSG`, one record per reproducible step.
pub fn world_modeling_samples(traj: &Trajectory, cfg: &EngineConfig) -> Vec<DataRecord> {
    let mut out = Vec::new();
    for (t, step) in traj.steps.iter().enumerate() {
        if !traj.step_is_consistent(t, cfg) {
            log::warn!("{} step {t}: graphs do not follow from the action; skipped", traj.id);
            continue;
        }
        let delta = diff(&step.scene_graph, traj.state_after(t));
        out.push(record(
            Modality::WorldModeling,
            json!({
                "scene_graph": graph_text(&step.scene_graph),
                "action": step.action.to_string(),
                "instruction": traj.instruction,
            }),
            json!({ "delta": delta }),
            &traj.id,
            t,
            1,
        ));
    }
    out
}

/// `(SG_t, SG_{t+n}) → A_t … A_{t+n−1}` for every valid `(t, n)`.
pub fn forward_reasoning_samples(traj: &Trajectory, horizons: &[usize]) -> Vec<DataRecord> {
    let len = traj.len();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &h in horizons {
        if h == 0 {
            pairs.insert((0, len));
        } else {
            pairs.extend((0..len).filter(|t| t + h <= len).map(|t| (t, h)));
        }
    }
    pairs
        .into_iter()
        .map(|(t, n)| {
            let actions: Vec<String> = traj.steps[t..t + n].iter().map(|s| s.action.to_string()).collect();
            record(
                Modality::ForwardReasoning,
                json!({
                    "scene_graph": graph_text(&traj.steps[t].scene_graph),
                    "target_scene_graph": graph_text(traj.state_after(t + n - 1)),
                    "instruction": traj.instruction,
                }),
                json!({ "actions": actions }),
                &traj.id,
                t,
                n,
            )
        })
        .collect()
}

/// `(SG_t, instruction) → A_t` for every step.
pub fn goal_planning_samples(traj: &Trajectory) -> Result<Vec<DataRecord>, DataError> {
    let goal = traj.goal_text()?;
    Ok(traj
        .steps
        .iter()
        .enumerate()
        .map(|(t, s)| {
            record(
                Modality::GoalPlanning,
                json!({ "scene_graph": graph_text(&s.scene_graph), "instruction": goal }),
                json!({ "action": s.action.to_string() }),
                &traj.id,
                t,
                1,
            )
        })
        .collect())
}

/// `(SG_0, instruction) → SG_end`.
pub fn goal_interpretation_samples(traj: &Trajectory) -> Result<DataRecord, DataError> {
    let goal = traj.goal_text()?;
    let first = traj
        .steps
        .first()
        .ok_or_else(|| DataError::EmptyTrajectory(traj.id.clone()))?;
    Ok(record(
        Modality::GoalInterpretation,
        json!({ "scene_graph": graph_text(&first.scene_graph), "instruction": goal }),
        json!({ "goal_scene_graph": graph_text(&traj.final_scene_graph) }),
        &traj.id,
        0,
        traj.len(),
    ))
}

/// All trajectory-derived records in a stable order: world modeling,
/// forward reasoning, goal planning, goal interpretation.
pub fn planning_family(
    traj: &Trajectory,
    horizons: &[usize],
    cfg: &EngineConfig,
) -> Result<Vec<DataRecord>, DataError> {
    traj.validate()?;
    let mut out = world_modeling_samples(traj, cfg);
    out.extend(forward_reasoning_samples(traj, horizons));
    out.extend(goal_planning_samples(traj)?);
    out.push(goal_interpretation_samples(traj)?);
    Ok(out)
}
