//! Canonicalization and edge deltas.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::error::{Result, SceneError};
use super::model::{Fact, NodeId, ObjectNode, Predicate, RelationEdge, RobotState, SceneGraph, UnaryState};
use super::serial::RawSceneGraph;

/// One side of an [`EdgeDelta`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSide {
    pub edges: BTreeSet<RelationEdge>,
    pub states: BTreeSet<(NodeId, UnaryState)>,
}

impl DeltaSide {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.states.is_empty()
    }

    fn from_facts<'a>(facts: impl Iterator<Item = &'a Fact>) -> Self {
        let mut side = DeltaSide::default();
        for f in facts {
            match f {
                Fact::Relation(e) => {
                    side.edges.insert(e.clone());
                }
                Fact::State { node, state } => {
                    side.states.insert((node.clone(), *state));
                }
            }
        }
        side
    }
}

/// Facts added and removed between two consecutive graphs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDelta {
    pub added: DeltaSide,
    pub removed: DeltaSide,
}

impl EdgeDelta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// Relational difference; geometry-only changes produce an empty delta.
pub fn diff(before: &SceneGraph, after: &SceneGraph) -> EdgeDelta {
    let b = before.facts();
    let a = after.facts();
    EdgeDelta {
        added: DeltaSide::from_facts(a.difference(&b)),
        removed: DeltaSide::from_facts(b.difference(&a)),
    }
}

/// Applies a delta produced by [`diff`]. The gripper value follows the
/// holding edge so that re-extraction agrees with the result.
pub fn apply_delta(sg: &SceneGraph, delta: &EdgeDelta) -> Result<SceneGraph> {
    let mut out = sg.clone();
    for e in &delta.removed.edges {
        if !out.remove_edge(e) {
            return Err(SceneError::DeltaMismatch(format!("edge `{e}` not present")));
        }
    }
    for (id, st) in &delta.removed.states {
        let node = out
            .node_mut(id)
            .ok_or_else(|| SceneError::DeltaMismatch(format!("state `{id} {st}` not present")))?;
        if !node.states.remove(st) {
            return Err(SceneError::DeltaMismatch(format!("state `{id} {st}` not present")));
        }
    }
    for e in &delta.added.edges {
        for end in [&e.subject, &e.object] {
            if !(end.is_robot() || out.contains_node(end.as_str())) {
                return Err(SceneError::UnknownNode(end.clone()));
            }
        }
        out.insert_edge(e.clone())
            .map_err(|err| SceneError::DeltaMismatch(err.to_string()))?;
    }
    for (id, st) in &delta.added.states {
        let node = out.node_mut(id).ok_or_else(|| SceneError::UnknownNode(id.clone()))?;
        if node.states.contains(&st.opposite()) {
            return Err(SceneError::DeltaMismatch(format!(
                "adding `{id} {st}` while `{}` still holds",
                st.opposite()
            )));
        }
        node.states.insert(*st);
    }
    let robot = out.robot_mut();
    match (&robot.held_object, robot.is_grasping()) {
        (Some(_), false) => robot.gripper_value = 1.0,
        (None, true) => robot.gripper_value = 0.0,
        _ => {}
    }
    Ok(out)
}

/// Canonicalizes a possibly inconsistent graph: aliases are rewritten,
/// bidirectional duplicates collapse, missing endpoints get stub nodes, and
/// structural defects are repaired rather than rejected.
pub fn normalize(raw: &RawSceneGraph) -> Result<SceneGraph> {
    let mut nodes: BTreeMap<NodeId, ObjectNode> = BTreeMap::new();
    for wn in &raw.nodes {
        let id = NodeId::new(wn.id.clone());
        if !id.is_well_formed() {
            return Err(SceneError::Schema(format!("node id `{id}` is not <category>_<NN>")));
        }
        if nodes.contains_key(&id) {
            continue;
        }
        let mut node = ObjectNode::stub(id.clone());
        node.pose = wn.pose.normalized();
        node.aabb = wn.aabb.repaired();
        node.category = id.category().unwrap_or_default().to_string();
        node.attributes = wn.attributes.clone();
        let mut seen = BTreeSet::new();
        node.keypoints = wn
            .keypoints
            .iter()
            .filter(|k| seen.insert(k.name.clone()))
            .cloned()
            .collect();
        node.children = wn.children.iter().map(|c| NodeId::new(c.clone())).collect();
        if let Some(a) = &wn.articulation {
            let mut a = a.clone();
            if a.joint_min > a.joint_max {
                std::mem::swap(&mut a.joint_min, &mut a.joint_max);
            }
            a.joint_value = a.joint_value.clamp(a.joint_min, a.joint_max);
            node.articulation = Some(a);
        }
        for tok in &wn.states {
            add_state(&mut node, tok.parse()?);
        }
        if let Some(a) = &node.articulation {
            let st = if a.is_open() {
                UnaryState::Open
            } else {
                UnaryState::Closed
            };
            node.states.remove(&st.opposite());
            node.states.insert(st);
        }
        nodes.insert(id, node);
    }

    let mut edges: BTreeSet<RelationEdge> = BTreeSet::new();
    let mut held_edges: Vec<NodeId> = Vec::new();
    for we in &raw.edges {
        let subject = NodeId::new(we.subject.trim());
        match &we.object {
            None => {
                let st: UnaryState = we.predicate.parse()?;
                let node = ensure_node(&mut nodes, &subject)?;
                add_state(node, st);
            }
            Some(obj) => {
                let (pred, reversed) = Predicate::resolve(&we.predicate)?;
                let object = NodeId::new(obj.trim());
                let (s, o) = if reversed { (object, subject) } else { (subject, object) };
                if s == o {
                    continue;
                }
                if pred == Predicate::Holding {
                    ensure_node(&mut nodes, &o)?;
                    held_edges.push(o);
                    continue;
                }
                if s.is_robot() || o.is_robot() {
                    continue;
                }
                ensure_node(&mut nodes, &s)?;
                ensure_node(&mut nodes, &o)?;
                edges.insert(RelationEdge::new(s, pred, o).canonical());
            }
        }
    }

    for id in nodes.keys().cloned().collect::<Vec<_>>() {
        let children = nodes[&id].children.clone();
        for c in &children {
            if c != &id {
                ensure_node(&mut nodes, c)?;
            }
        }
    }
    break_child_cycles(&mut nodes);

    let declared = raw.robot.held_object.as_deref().map(NodeId::from);
    let held = match &declared {
        Some(d) if held_edges.contains(d) || held_edges.is_empty() => Some(d.clone()),
        _ => held_edges.iter().min().cloned(),
    };
    if let Some(h) = &held {
        ensure_node(&mut nodes, h)?;
        edges.insert(RelationEdge::holding(h.clone()));
    }
    let mut robot = RobotState {
        gripper_value: raw.robot.gripper_value,
        gripper_threshold: raw.robot.gripper_threshold,
        held_object: held,
    };
    if robot.held_object.is_some() && !robot.is_grasping() {
        robot.gripper_value = robot.gripper_threshold + 0.5;
    }
    SceneGraph::from_parts(nodes.into_values(), edges, robot)
}

fn add_state(node: &mut ObjectNode, st: UnaryState) {
    // the first of two conflicting states wins
    if !node.states.contains(&st.opposite()) {
        node.states.insert(st);
    }
}

fn ensure_node<'a>(
    nodes: &'a mut BTreeMap<NodeId, ObjectNode>,
    id: &NodeId,
) -> Result<&'a mut ObjectNode> {
    if !id.is_well_formed() {
        return Err(SceneError::Schema(format!("node id `{id}` is not <category>_<NN>")));
    }
    Ok(nodes
        .entry(id.clone())
        .or_insert_with(|| ObjectNode::stub(id.clone())))
}

fn break_child_cycles(nodes: &mut BTreeMap<NodeId, ObjectNode>) {
    let ids: Vec<NodeId> = nodes.keys().cloned().collect();
    for id in ids {
        let children = nodes[&id].children.clone();
        let mut kept = Vec::new();
        for c in children {
            if c == id || reaches(nodes, &c, &id) || kept.contains(&c) {
                continue;
            }
            kept.push(c);
        }
        nodes.get_mut(&id).expect("id from keys").children = kept;
    }
}

fn reaches(nodes: &BTreeMap<NodeId, ObjectNode>, from: &NodeId, to: &NodeId) -> bool {
    let mut stack = vec![from.clone()];
    let mut seen = BTreeSet::new();
    while let Some(cur) = stack.pop() {
        if &cur == to {
            return true;
        }
        if seen.insert(cur.clone()) {
            if let Some(n) = nodes.get(&cur) {
                stack.extend(n.children.iter().cloned());
            }
        }
    }
    false
}
