//! Step-by-step re-execution of recorded trajectories.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::data::Trajectory;
use crate::engine::{execute_with, EngineConfig};
use crate::scene::{diff, reextract, EdgeDelta};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayStep {
    pub step: usize,
    pub action: String,
    pub sigma: bool,
    pub delta: EdgeDelta,
    pub facts: usize,
}

/// Re-executes every action from the recorded start state. Fails at the
/// first step whose outcome differs from the recording or whose relations
/// no longer match the geometry.
pub fn replay_trajectory(traj: &Trajectory, cfg: &EngineConfig) -> Result<Vec<ReplayStep>, HarnessError> {
    let diverge = |step: usize, reason: String| HarnessError::Divergence {
        trajectory: traj.id.clone(),
        step,
        reason,
    };
    let first = traj
        .steps
        .first()
        .ok_or_else(|| diverge(0, "empty trajectory".into()))?;
    let mut sg = first.scene_graph.clone();
    let mut out = Vec::with_capacity(traj.steps.len());
    for (t, step) in traj.steps.iter().enumerate() {
        if !sg.relationally_equal(&step.scene_graph) {
            return Err(diverge(t, "replayed state differs from the recorded input".into()));
        }
        let (next, sigma) = if step.action.is_end() {
            (sg.clone(), true)
        } else {
            let r = execute_with(&sg, &step.action, cfg);
            (r.graph, r.success)
        };
        let geometric = reextract(&next, &cfg.extraction).map_err(|e| diverge(t, e.to_string()))?;
        if geometric.edges() != next.edges() {
            return Err(diverge(t, "relations drifted from geometry".into()));
        }
        if !next.relationally_equal(traj.state_after(t)) {
            return Err(diverge(t, "outcome differs from the recorded next state".into()));
        }
        out.push(ReplayStep {
            step: t,
            action: step.action.to_string(),
            sigma,
            delta: diff(&sg, &next),
            facts: next.facts().len(),
        });
        sg = next;
    }
    Ok(out)
}
