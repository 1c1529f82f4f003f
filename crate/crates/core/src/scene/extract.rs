//! Relation extraction from object geometry.
//!
//! Each unordered pair of free objects is classified by a fixed ladder:
//! containment (intersection volume over the candidate's own volume above
//! `inside_threshold`), then resting contact (`ontop`, stored with the
//! higher object as subject), then horizontal proximity (`beside`, stored
//! with the smaller id as subject). Containment is reduced to the innermost
//! container. Articulated joints give open/closed, and a closed gripper
//! yields the single `holding` edge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::error::{Result, SceneError};
use super::geometry::{horizontal_distance, Aabb};
use super::model::{NodeId, ObjectNode, Predicate, RelationEdge, RobotState, SceneGraph, UnaryState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// IoA threshold for `inside`.
    pub inside_threshold: f64,
    /// Minimum horizontal overlap, relative to the smaller footprint, for `ontop`.
    pub overlap_threshold: f64,
    /// Maximum vertical gap (either sign) between resting faces, meters.
    pub contact_tolerance: f64,
    /// Maximum horizontal center distance for `beside`, meters.
    pub beside_distance: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            inside_threshold: 0.5,
            overlap_threshold: 0.25,
            contact_tolerance: 0.01,
            beside_distance: 0.15,
        }
    }
}

/// Classification of one unordered pair before the innermost-container pass.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum PairRelation {
    None,
    /// `inside(subject, object)`, subject to innermost reduction.
    Inside(NodeId, NodeId),
    Edge(RelationEdge),
}

pub(crate) fn rests_on(upper: &Aabb, lower: &Aabb, cfg: &ExtractionConfig) -> bool {
    let gap = upper.min[2] - lower.max[2];
    if gap.abs() > cfg.contact_tolerance || upper.center()[2] <= lower.center()[2] {
        return false;
    }
    let smaller = upper.footprint_area().min(lower.footprint_area());
    smaller > 0.0 && upper.footprint_overlap(lower) / smaller >= cfg.overlap_threshold
}

pub(crate) fn near(a: &Aabb, b: &Aabb, cfg: &ExtractionConfig) -> bool {
    horizontal_distance(a, b) <= cfg.beside_distance && a.axis_overlap(b, 2) > 0.0
}

/// Runs the case ladder on a pair of nodes.
pub(crate) fn classify_pair(a: &ObjectNode, b: &ObjectNode, cfg: &ExtractionConfig) -> PairRelation {
    let (a, b) = if a.id <= b.id { (a, b) } else { (b, a) };
    let shared = a.aabb.intersection_volume(&b.aabb);
    let ioa_a = shared / a.aabb.volume();
    let ioa_b = shared / b.aabb.volume();
    if ioa_a > cfg.inside_threshold || ioa_b > cfg.inside_threshold {
        return if ioa_a >= ioa_b {
            PairRelation::Inside(a.id.clone(), b.id.clone())
        } else {
            PairRelation::Inside(b.id.clone(), a.id.clone())
        };
    }
    if rests_on(&a.aabb, &b.aabb, cfg) {
        return PairRelation::Edge(RelationEdge::new(a.id.clone(), Predicate::OnTop, b.id.clone()));
    }
    if rests_on(&b.aabb, &a.aabb, cfg) {
        return PairRelation::Edge(RelationEdge::new(b.id.clone(), Predicate::OnTop, a.id.clone()));
    }
    if near(&a.aabb, &b.aabb, cfg) {
        return PairRelation::Edge(RelationEdge::new(a.id.clone(), Predicate::Beside, b.id.clone()));
    }
    PairRelation::None
}

/// Parent lookup built from `children` lists.
pub(crate) fn parent_map(nodes: &BTreeMap<NodeId, ObjectNode>) -> BTreeMap<&NodeId, &NodeId> {
    let mut out = BTreeMap::new();
    for n in nodes.values() {
        for c in &n.children {
            out.entry(c).or_insert(&n.id);
        }
    }
    out
}

fn is_ancestor(parents: &BTreeMap<&NodeId, &NodeId>, ancestor: &NodeId, id: &NodeId) -> bool {
    let mut cur = id;
    let mut steps = 0;
    while let Some(p) = parents.get(cur) {
        if *p == ancestor {
            return true;
        }
        cur = p;
        steps += 1;
        if steps > parents.len() {
            break;
        }
    }
    false
}

/// Parts of the same articulated assembly are not related spatially.
pub(crate) fn same_assembly(parents: &BTreeMap<&NodeId, &NodeId>, a: &NodeId, b: &NodeId) -> bool {
    if is_ancestor(parents, a, b) || is_ancestor(parents, b, a) {
        return true;
    }
    matches!((parents.get(a), parents.get(b)), (Some(pa), Some(pb)) if pa == pb)
}

/// Drops `inside(a, b)` when `a` is inside some `c` that is itself a part of
/// `b` or inside `b`.
pub(crate) fn innermost(
    candidates: &BTreeSet<(NodeId, NodeId)>,
    parents: &BTreeMap<&NodeId, &NodeId>,
) -> BTreeSet<(NodeId, NodeId)> {
    candidates
        .iter()
        .filter(|(a, b)| {
            !candidates.iter().any(|(a2, c)| {
                a2 == a
                    && c != b
                    && (is_ancestor(parents, b, c) || candidates.contains(&(c.clone(), b.clone())))
            })
        })
        .cloned()
        .collect()
}

/// Re-derives `sg`'s relations from its own geometry. A graph is
/// geometrically consistent when this reproduces its spatial edges.
pub fn reextract(sg: &SceneGraph, cfg: &ExtractionConfig) -> Result<SceneGraph> {
    extract_relations(sg.nodes().values().cloned().collect(), sg.robot(), cfg)
}

/// Builds a canonical scene graph from object geometry and robot state.
pub fn extract_relations(
    objects: Vec<ObjectNode>,
    robot: &RobotState,
    cfg: &ExtractionConfig,
) -> Result<SceneGraph> {
    let mut nodes: BTreeMap<NodeId, ObjectNode> = BTreeMap::new();
    for mut n in objects {
        if nodes.contains_key(&n.id) {
            return Err(SceneError::DuplicateNode(n.id));
        }
        if !(n.aabb.volume() > 0.0) {
            return Err(SceneError::DegenerateGeometry(n.id));
        }
        if let Some(art) = &n.articulation {
            let st = if art.is_open() {
                UnaryState::Open
            } else {
                UnaryState::Closed
            };
            n.states.remove(&st.opposite());
            n.states.insert(st);
        }
        nodes.insert(n.id.clone(), n);
    }

    let held = match &robot.held_object {
        Some(h) if robot.is_grasping() => {
            if !nodes.contains_key(h) {
                return Err(SceneError::UnknownNode(h.clone()));
            }
            Some(h.clone())
        }
        _ => None,
    };

    let parents = parent_map(&nodes);
    let free: Vec<&ObjectNode> = nodes
        .values()
        .filter(|n| Some(&n.id) != held.as_ref())
        .collect();
    let mut edges = BTreeSet::new();
    let mut inside = BTreeSet::new();
    for (i, a) in free.iter().enumerate() {
        for b in &free[i + 1..] {
            if same_assembly(&parents, &a.id, &b.id) {
                continue;
            }
            match classify_pair(a, b, cfg) {
                PairRelation::None => {}
                PairRelation::Inside(s, o) => {
                    inside.insert((s, o));
                }
                PairRelation::Edge(e) => {
                    edges.insert(e);
                }
            }
        }
    }
    for (s, o) in innermost(&inside, &parents) {
        edges.insert(RelationEdge::new(s, Predicate::Inside, o));
    }
    if let Some(h) = &held {
        edges.insert(RelationEdge::holding(h.clone()));
    }
    let robot = RobotState {
        gripper_value: robot.gripper_value,
        gripper_threshold: robot.gripper_threshold,
        held_object: held,
    };
    SceneGraph::from_parts(nodes.into_values(), edges, robot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::model::Articulation;

    fn node(id: &str, min: [f64; 3], max: [f64; 3]) -> ObjectNode {
        ObjectNode::new(id, Aabb::new(min, max))
    }

    fn extract(objs: Vec<ObjectNode>) -> SceneGraph {
        extract_relations(objs, &RobotState::empty(), &ExtractionConfig::default()).unwrap()
    }

    #[test]
    fn cube_resting_on_box_is_ontop() {
        let sg = extract(vec![
            node("cube_01", [0.0, 0.0, 0.10], [0.05, 0.05, 0.15]),
            node("box_01", [0.0, 0.0, 0.0], [0.2, 0.2, 0.10]),
        ]);
        let edges: Vec<_> = sg.edges().iter().cloned().collect();
        assert_eq!(edges, vec![RelationEdge::new("cube_01", Predicate::OnTop, "box_01")]);
    }

    #[test]
    fn cube_within_box_is_inside_only() {
        let sg = extract(vec![
            node("cube_01", [0.05, 0.05, 0.02], [0.10, 0.10, 0.07]),
            node("box_01", [0.0, 0.0, 0.0], [0.2, 0.2, 0.10]),
        ]);
        let edges: Vec<_> = sg.edges().iter().cloned().collect();
        assert_eq!(edges, vec![RelationEdge::new("cube_01", Predicate::Inside, "box_01")]);
    }

    #[test]
    fn distant_objects_unrelated() {
        let sg = extract(vec![
            node("cube_01", [0.0, 0.0, 0.0], [0.05, 0.05, 0.05]),
            node("cube_02", [5.0, 0.0, 0.0], [5.05, 0.05, 0.05]),
        ]);
        assert!(sg.edges().is_empty());
    }

    #[test]
    fn nearby_objects_are_beside_with_smaller_subject() {
        let sg = extract(vec![
            node("mug_01", [0.10, 0.0, 0.0], [0.15, 0.05, 0.05]),
            node("cube_01", [0.0, 0.0, 0.0], [0.05, 0.05, 0.05]),
        ]);
        let edges: Vec<_> = sg.edges().iter().cloned().collect();
        assert_eq!(edges, vec![RelationEdge::new("cube_01", Predicate::Beside, "mug_01")]);
    }

    #[test]
    fn joint_above_threshold_is_open() {
        let drawer = node("drawer_01", [0.0; 3], [0.4, 0.4, 0.2]).with_articulation(Articulation {
            joint_value: 0.12,
            joint_min: 0.0,
            joint_max: 0.3,
            open_threshold: 0.05,
        });
        let sg = extract(vec![drawer]);
        let d = sg.node(&"drawer_01".into()).unwrap();
        assert!(d.has_state(UnaryState::Open));
        assert!(!d.has_state(UnaryState::Closed));
    }

    #[test]
    fn grasped_object_only_gets_holding() {
        let objs = vec![
            node("cube_01", [0.0, 0.0, 0.10], [0.05, 0.05, 0.15]),
            node("box_01", [0.0, 0.0, 0.0], [0.2, 0.2, 0.10]),
        ];
        let sg = extract_relations(
            objs,
            &RobotState::grasping("cube_01"),
            &ExtractionConfig::default(),
        )
        .unwrap();
        let edges: Vec<_> = sg.edges().iter().cloned().collect();
        assert_eq!(edges, vec![RelationEdge::holding("cube_01")]);
        assert_eq!(sg.held(), Some(&NodeId::new("cube_01")));
    }

    #[test]
    fn open_gripper_holds_nothing() {
        let mut robot = RobotState::grasping("cube_01");
        robot.gripper_value = 0.1;
        let sg = extract_relations(
            vec![node("cube_01", [0.0; 3], [0.05; 3])],
            &robot,
            &ExtractionConfig::default(),
        )
        .unwrap();
        assert!(sg.edges().is_empty());
        assert_eq!(sg.held(), None);
    }

    #[test]
    fn containment_resolves_to_drawer_not_cabinet() {
        let mut cabinet = node("cabinet_01", [0.0; 3], [0.6, 0.5, 0.83]);
        cabinet.children = vec!["drawer_01".into()];
        let drawer = node("drawer_01", [0.02, 0.02, 0.02], [0.58, 0.48, 0.27]);
        let cube = node("cube_01", [0.1, 0.1, 0.04], [0.15, 0.15, 0.09]);
        let sg = extract(vec![cabinet, drawer, cube]);
        let edges: Vec<_> = sg.edges().iter().cloned().collect();
        assert_eq!(edges, vec![RelationEdge::new("cube_01", Predicate::Inside, "drawer_01")]);
    }

    #[test]
    fn errors_on_duplicates_and_degenerate_boxes() {
        let cfg = ExtractionConfig::default();
        let r = RobotState::empty();
        let dup = vec![node("a_01", [0.0; 3], [1.0; 3]), node("a_01", [0.0; 3], [1.0; 3])];
        assert_eq!(
            extract_relations(dup, &r, &cfg).unwrap_err(),
            SceneError::DuplicateNode("a_01".into())
        );
        let flat = vec![node("a_01", [0.0; 3], [1.0, 1.0, 0.0])];
        assert_eq!(
            extract_relations(flat, &r, &cfg).unwrap_err(),
            SceneError::DegenerateGeometry("a_01".into())
        );
    }
}
