//! Preconditions, the transition function and the staged execution loop.
//!
//! Motion is abstracted: every feasible action succeeds, and geometry is
//! updated so that re-extracting relations reproduces the symbolic edges.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::{ActionCommand, Verb};
use crate::assets;
use crate::scene::{
    classify_pair, Aabb, ExtractionConfig, NodeId, ObjectNode, PairRelation, Predicate,
    RelationEdge, SceneError, SceneGraph, UnaryState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("illegal transition: {0}")]
    IllegalTransition(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "reason")]
pub enum Feasibility {
    Ok,
    Blocked(String),
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Feasibility::Ok)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub extraction: ExtractionConfig,
    /// Joint value above the open threshold that `open` drives to.
    pub open_margin: f64,
    /// Horizontal clearance kept around placed objects, meters.
    pub clearance: f64,
    /// Wall and floor thickness assumed for containers, meters.
    pub wall: f64,
    /// Grid step for placement search, meters.
    pub slot_step: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            extraction: ExtractionConfig::default(),
            open_margin: 0.1,
            clearance: 0.01,
            wall: 0.02,
            slot_step: 0.01,
        }
    }
}

/// Where a held object rests while carried; excluded from extraction.
pub const GRIPPER_HOME: [f64; 3] = [0.0, -0.9, 1.2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub verdict: Verdict,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionResult {
    pub success: bool,
    pub graph: SceneGraph,
    pub log: Vec<StageRecord>,
}

/// The fixed waypoint script every verb follows.
pub const STAGES: [&str; 3] = ["approach", "interact", "retract"];

fn node<'a>(sg: &'a SceneGraph, id: &NodeId) -> Result<&'a ObjectNode, EngineError> {
    sg.node(id).ok_or_else(|| EngineError::UnknownNode(id.clone()))
}

/// Resolves `cabinet_01.drawer_02` style qualifiers to the child node.
pub fn resolve_target(sg: &SceneGraph, cmd: &ActionCommand) -> Option<NodeId> {
    let t = cmd.target.as_ref()?;
    if let Some(k) = &cmd.keypoint {
        let child = NodeId::new(k.clone());
        if sg.node(t).is_some_and(|n| n.children.contains(&child)) && sg.contains_node(k) {
            return Some(child);
        }
    }
    Some(t.clone())
}

pub fn is_container(n: &ObjectNode) -> bool {
    n.attr("container").map_or_else(|| assets::is_container_kind(n.kind()), |v| v == "true")
}

pub fn is_movable(n: &ObjectNode) -> bool {
    n.attr("movable")
        .map_or_else(|| !assets::is_fixed_kind(n.kind()), |v| v == "true")
}

pub fn is_drawer(n: &ObjectNode) -> bool {
    n.kind() == "drawer"
}

fn has_open_close(n: &ObjectNode) -> bool {
    n.articulation.is_some() || n.has_state(UnaryState::Open) || n.has_state(UnaryState::Closed)
}

fn switchable(n: &ObjectNode) -> bool {
    n.has_state(UnaryState::On) || n.has_state(UnaryState::Off) || assets::is_switchable_kind(n.kind())
}

/// Open sibling drawers strictly above `drawer` in the same cabinet.
pub fn open_drawers_above<'a>(sg: &'a SceneGraph, drawer: &ObjectNode) -> Vec<&'a NodeId> {
    let Some(parent) = sg.parent_of(&drawer.id) else {
        return Vec::new();
    };
    let parent = &sg.nodes()[parent];
    parent
        .children
        .iter()
        .filter(|c| *c != &drawer.id)
        .filter_map(|c| sg.node(c))
        .filter(|s| is_drawer(s) && s.has_state(UnaryState::Open))
        .filter(|s| s.aabb.center()[2] > drawer.aabb.center()[2])
        .map(|s| &s.id)
        .collect()
}

/// The container `id` is directly inside, if any.
fn container_of<'a>(sg: &'a SceneGraph, id: &NodeId) -> Option<&'a NodeId> {
    sg.objects_of(id, Predicate::Inside).into_iter().next()
}

/// Checks whether `cmd` may run in `sg`.
pub fn preconditions(sg: &SceneGraph, cmd: &ActionCommand) -> Result<Feasibility, EngineError> {
    preconditions_with(sg, cmd, &EngineConfig::default())
}

pub fn preconditions_with(
    sg: &SceneGraph,
    cmd: &ActionCommand,
    cfg: &EngineConfig,
) -> Result<Feasibility, EngineError> {
    use Feasibility::{Blocked, Ok as Fine};
    if cmd.verb == Verb::End {
        return Ok(Fine);
    }
    let tid = resolve_target(sg, cmd).ok_or_else(|| {
        EngineError::IllegalTransition(format!("{:?} requires a target", cmd.verb))
    })?;
    let t = node(sg, &tid)?;
    let blocked = |m: String| Ok(Blocked(m));
    match cmd.verb {
        Verb::Pick => {
            if let Some(h) = sg.held() {
                return blocked(format!("gripper already holds {h}"));
            }
            if !is_movable(t) {
                return blocked(format!("{tid} is not movable"));
            }
            if let Some(c) = container_of(sg, &tid) {
                let c = node(sg, c)?;
                if c.has_state(UnaryState::Closed) {
                    return blocked("inside closed container".into());
                }
                if is_drawer(c) {
                    if let Some(d) = open_drawers_above(sg, c).first() {
                        return blocked(format!("drawer obstructed by open {d}"));
                    }
                }
            }
            if let Some(o) = sg.subjects_of(Predicate::OnTop, &tid).first() {
                return blocked(format!("occluded by {o}"));
            }
            if let Some(o) = sg.subjects_of(Predicate::Inside, &tid).first() {
                return blocked(format!("{tid} still contains {o}"));
            }
            Ok(Fine)
        }
        Verb::PlaceOn | Verb::PlaceInside => {
            let Some(held) = sg.held() else {
                return blocked("gripper is empty".into());
            };
            if held == &tid {
                return blocked(format!("cannot place {held} relative to itself"));
            }
            if sg.is_descendant(&tid, held) {
                return blocked(format!("{tid} is part of {held}"));
            }
            if cmd.verb == Verb::PlaceInside {
                if !is_container(t) {
                    return blocked(format!("{tid} is not a container"));
                }
                if t.has_state(UnaryState::Closed) {
                    return blocked(format!("{tid} is closed"));
                }
                if let Some(o) = sg.subjects_of(Predicate::OnTop, &tid).first() {
                    return blocked(format!("{tid} is covered by {o}"));
                }
                if is_drawer(t) {
                    if let Some(d) = open_drawers_above(sg, t).first() {
                        return blocked(format!("drawer obstructed by open {d}"));
                    }
                }
            }
            if find_slot(sg, held, &tid, cmd.verb, cfg).is_none() {
                return blocked(format!("no free space at {tid}"));
            }
            Ok(Fine)
        }
        Verb::Open | Verb::Close | Verb::Push => {
            if cmd.verb == Verb::Push && !is_drawer(t) {
                return blocked(format!("push applies to drawers, not {tid}"));
            }
            if !has_open_close(t) {
                return blocked(format!("{tid} cannot be opened or closed"));
            }
            let want = if cmd.verb == Verb::Open {
                UnaryState::Open
            } else {
                UnaryState::Closed
            };
            if t.has_state(want) {
                return blocked(format!("{tid} is already {want}"));
            }
            if cmd.verb == Verb::Open && is_drawer(t) {
                if let Some(d) = open_drawers_above(sg, t).first() {
                    return blocked(format!("drawer obstructed by open {d}"));
                }
            }
            if sg.held().is_some_and(|h| h == &tid) {
                return blocked(format!("{tid} is being held"));
            }
            Ok(Fine)
        }
        Verb::TurnOn | Verb::TurnOff => {
            if !switchable(t) {
                return blocked(format!("{tid} has no on/off state"));
            }
            let want = if cmd.verb == Verb::TurnOn {
                UnaryState::On
            } else {
                UnaryState::Off
            };
            if t.has_state(want) {
                return blocked(format!("{tid} is already {want}"));
            }
            Ok(Fine)
        }
        Verb::End => unreachable!(),
    }
}

/// Searches for a resting box for `held` on or inside `dest`.
///
/// Candidates are tried centered first, then row by row on a grid over the
/// allowed region. A candidate is accepted when the pair classifies as the
/// intended relation and the inflated box touches no other object.
pub(crate) fn find_slot(
    sg: &SceneGraph,
    held: &NodeId,
    dest: &NodeId,
    verb: Verb,
    cfg: &EngineConfig,
) -> Option<Aabb> {
    let h = sg.node(held)?;
    let d = sg.node(dest)?;
    let size = h.aabb.size();
    if size.iter().any(|s| !(*s > 0.0)) {
        return None;
    }
    let (lo, hi, base_z) = match verb {
        Verb::PlaceOn => {
            // fully supported where the support is wider, centered otherwise
            let span = |a: usize| {
                let half = size[a] / 2.0;
                if d.aabb.max[a] - d.aabb.min[a] >= size[a] {
                    (d.aabb.min[a] + half, d.aabb.max[a] - half)
                } else {
                    let c = (d.aabb.min[a] + d.aabb.max[a]) / 2.0;
                    (c, c)
                }
            };
            let (x, y) = (span(0), span(1));
            ([x.0, y.0], [x.1, y.1], d.aabb.max[2])
        }
        Verb::PlaceInside => (
            [
                d.aabb.min[0] + cfg.wall + size[0] / 2.0,
                d.aabb.min[1] + cfg.wall + size[1] / 2.0,
            ],
            [
                d.aabb.max[0] - cfg.wall - size[0] / 2.0,
                d.aabb.max[1] - cfg.wall - size[1] / 2.0,
            ],
            d.aabb.min[2] + cfg.wall,
        ),
        _ => return None,
    };
    if lo[0] > hi[0] + 1e-12 || lo[1] > hi[1] + 1e-12 {
        return None;
    }

    // Obstacles: everything except the mover, the destination and its ancestors.
    let mut excluded: Vec<&NodeId> = vec![held, dest];
    let mut cur = dest;
    while let Some(p) = sg.parent_of(cur) {
        if excluded.contains(&p) {
            break;
        }
        excluded.push(p);
        cur = p;
    }
    let region = Aabb::new(
        [lo[0] - size[0], lo[1] - size[1], base_z - 1.0],
        [hi[0] + size[0], hi[1] + size[1], base_z + size[2] + 1.0],
    );
    let obstacles: Vec<&ObjectNode> = sg
        .nodes()
        .values()
        .filter(|n| !excluded.contains(&&n.id))
        .filter(|n| n.aabb.volume() > 0.0 && n.aabb.intersects(&region))
        .collect();

    let intended = |cand: &ObjectNode| match classify_pair(cand, d, &cfg.extraction) {
        PairRelation::Inside(s, o) => verb == Verb::PlaceInside && s == *held && o == *dest,
        PairRelation::Edge(e) => {
            verb == Verb::PlaceOn
                && e.predicate == Predicate::OnTop
                && e.subject == *held
                && e.object == *dest
        }
        PairRelation::None => false,
    };
    let mut probe = h.clone();
    let mut try_at = |x: f64, y: f64| -> Option<Aabb> {
        let cand = Aabb::from_base([x, y, base_z], size);
        let padded = cand.inflated(cfg.clearance, cfg.extraction.contact_tolerance);
        if obstacles.iter().any(|o| o.aabb.intersects(&padded)) {
            return None;
        }
        probe.aabb = cand.clone();
        intended(&probe).then_some(cand)
    };

    let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    if let Some(c) = try_at(center[0], center[1]) {
        return Some(c);
    }
    let step = cfg.slot_step;
    let nx = ((hi[0] - lo[0]) / step).floor() as i64;
    let ny = ((hi[1] - lo[1]) / step).floor() as i64;
    for j in 0..=ny {
        for i in 0..=nx {
            let x = lo[0] + i as f64 * step;
            let y = lo[1] + j as f64 * step;
            if let Some(c) = try_at(x, y) {
                return Some(c);
            }
        }
    }
    None
}

/// Recomputes `beside` edges incident to `id` from geometry.
fn refresh_beside(sg: &mut SceneGraph, id: &NodeId, cfg: &ExtractionConfig) -> Result<(), SceneError> {
    let stale: Vec<RelationEdge> = sg
        .edges_of(id)
        .filter(|e| e.predicate == Predicate::Beside)
        .cloned()
        .collect();
    for e in &stale {
        sg.remove_edge(e);
    }
    if sg.held() == Some(id) {
        return Ok(());
    }
    let parents = crate::scene::parent_map(sg.nodes());
    let me = &sg.nodes()[id];
    let mut fresh = Vec::new();
    for other in sg.nodes().values() {
        if &other.id == id
            || sg.held() == Some(&other.id)
            || crate::scene::same_assembly(&parents, id, &other.id)
        {
            continue;
        }
        if let PairRelation::Edge(e) = classify_pair(me, other, cfg) {
            if e.predicate == Predicate::Beside {
                fresh.push(e);
            }
        }
    }
    for e in fresh {
        sg.insert_edge(e)?;
    }
    Ok(())
}

fn set_joint(n: &mut ObjectNode, open: bool, cfg: &EngineConfig) {
    if let Some(a) = &mut n.articulation {
        a.joint_value = if open {
            (a.open_threshold + cfg.open_margin).min(a.joint_max)
        } else {
            a.joint_min
        };
    }
    let st = if open { UnaryState::Open } else { UnaryState::Closed };
    n.states.remove(&st.opposite());
    n.states.insert(st);
}

/// Applies `cmd` to `sg`. Fails when the preconditions do not hold.
pub fn transition(sg: &SceneGraph, cmd: &ActionCommand) -> Result<SceneGraph, EngineError> {
    transition_with(sg, cmd, &EngineConfig::default())
}

pub fn transition_with(
    sg: &SceneGraph,
    cmd: &ActionCommand,
    cfg: &EngineConfig,
) -> Result<SceneGraph, EngineError> {
    if let Feasibility::Blocked(reason) = preconditions_with(sg, cmd, cfg)? {
        return Err(EngineError::IllegalTransition(reason));
    }
    if cmd.verb == Verb::End {
        return Ok(sg.clone());
    }
    let tid = resolve_target(sg, cmd).expect("checked by preconditions");
    let mut out = sg.clone();
    match cmd.verb {
        Verb::Pick => {
            let stale: Vec<RelationEdge> = out
                .edges_of(&tid)
                .filter(|e| e.predicate.is_spatial())
                .cloned()
                .collect();
            for e in &stale {
                out.remove_edge(e);
            }
            let n = out.node_mut(&tid).expect("target exists");
            let parked = Aabb::from_base(
                [GRIPPER_HOME[0], GRIPPER_HOME[1], GRIPPER_HOME[2]],
                n.aabb.size(),
            );
            n.move_to(parked);
            out.insert_edge(RelationEdge::holding(tid.clone()))?;
            out.robot_mut().gripper_value = 1.0;
        }
        Verb::PlaceOn | Verb::PlaceInside => {
            let held = out.held().cloned().expect("checked by preconditions");
            let slot = find_slot(&out, &held, &tid, cmd.verb, cfg)
                .ok_or_else(|| EngineError::IllegalTransition(format!("no free space at {tid}")))?;
            out.remove_edge(&RelationEdge::holding(held.clone()));
            out.robot_mut().gripper_value = 0.0;
            out.node_mut(&held).expect("held exists").move_to(slot);
            let pred = if cmd.verb == Verb::PlaceOn {
                Predicate::OnTop
            } else {
                Predicate::Inside
            };
            out.insert_edge(RelationEdge::new(held.clone(), pred, tid.clone()))?;
            refresh_beside(&mut out, &held, &cfg.extraction)?;
        }
        Verb::Open => set_joint(out.node_mut(&tid).expect("target exists"), true, cfg),
        Verb::Close | Verb::Push => set_joint(out.node_mut(&tid).expect("target exists"), false, cfg),
        Verb::TurnOn | Verb::TurnOff => {
            let st = if cmd.verb == Verb::TurnOn {
                UnaryState::On
            } else {
                UnaryState::Off
            };
            let n = out.node_mut(&tid).expect("target exists");
            n.states.remove(&st.opposite());
            n.states.insert(st);
        }
        Verb::End => unreachable!(),
    }
    out.validate()?;
    Ok(out)
}

/// Checks the effect of `cmd` on `target` in `sg`.
fn effect_holds(sg: &SceneGraph, cmd: &ActionCommand, target: &NodeId, held_before: Option<&NodeId>) -> bool {
    let state = |s| sg.node(target).is_some_and(|n| n.has_state(s));
    match cmd.verb {
        Verb::Pick => sg.held() == Some(target),
        Verb::PlaceOn | Verb::PlaceInside => {
            let pred = if cmd.verb == Verb::PlaceOn {
                Predicate::OnTop
            } else {
                Predicate::Inside
            };
            held_before.is_some_and(|h| sg.has_edge(&RelationEdge::new(h.clone(), pred, target.clone())))
                && sg.held().is_none()
        }
        Verb::Open => state(UnaryState::Open),
        Verb::Close | Verb::Push => state(UnaryState::Closed),
        Verb::TurnOn => state(UnaryState::On),
        Verb::TurnOff => state(UnaryState::Off),
        Verb::End => true,
    }
}

/// Runs the approach/interact/retract script with per-stage verification.
pub fn execute(sg: &SceneGraph, cmd: &ActionCommand) -> ExecutionResult {
    execute_with(sg, cmd, &EngineConfig::default())
}

pub fn execute_with(sg: &SceneGraph, cmd: &ActionCommand, cfg: &EngineConfig) -> ExecutionResult {
    let fail = |log: Vec<StageRecord>, graph: &SceneGraph| ExecutionResult {
        success: false,
        graph: graph.clone(),
        log,
    };
    if cmd.validate().is_err() {
        return fail(Vec::new(), sg);
    }
    let target = if cmd.verb == Verb::End {
        None
    } else {
        match resolve_target(sg, cmd) {
            Some(t) if sg.contains_node(t.as_str()) => Some(t),
            _ => return fail(Vec::new(), sg),
        }
    };
    match preconditions_with(sg, cmd, cfg) {
        Ok(Feasibility::Ok) => {}
        Ok(Feasibility::Blocked(reason)) => {
            let rec = StageRecord {
                stage: 0,
                verdict: Verdict::Blocked,
                message: reason,
            };
            return fail(vec![rec], sg);
        }
        Err(e) => {
            let rec = StageRecord {
                stage: 0,
                verdict: Verdict::Blocked,
                message: e.to_string(),
            };
            return fail(vec![rec], sg);
        }
    }

    let held_before = sg.held().cloned();
    let mut log = Vec::with_capacity(STAGES.len());
    let mut current = sg.clone();
    for (i, stage) in STAGES.iter().enumerate() {
        let (ok, message) = match i {
            0 => (
                target.as_ref().is_none_or(|t| current.contains_node(t.as_str())),
                format!("{stage} {}", target.as_ref().map_or("-", |t| t.as_str())),
            ),
            1 => match transition_with(&current, cmd, cfg) {
                Ok(next) => {
                    current = next;
                    let ok = target
                        .as_ref()
                        .is_none_or(|t| effect_holds(&current, cmd, t, held_before.as_ref()));
                    (ok, format!("{stage} {cmd}"))
                }
                Err(e) => (false, e.to_string()),
            },
            _ => {
                let ok = current.validate().is_ok()
                    && target
                        .as_ref()
                        .is_none_or(|t| effect_holds(&current, cmd, t, held_before.as_ref()));
                (ok, format!("{stage} verified"))
            }
        };
        log.push(StageRecord {
            stage: i + 1,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            message,
        });
        if !ok {
            return fail(log, &current);
        }
    }
    ExecutionResult {
        success: true,
        graph: current,
        log,
    }
}
