//! The scene-graph data model.
//!
//! A [`SceneGraph`] is a set of object nodes plus canonical relation edges
//! and the robot's gripper state. Its invariants are checked on every
//! mutation so that an edge can never name a missing node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::error::{Result, SceneError};
use super::geometry::{Aabb, Pose};

/// Reserved endpoint for the robot's gripper in `holding` edges.
pub const ROBOT_ID: &str = "robot";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn robot() -> Self {
        Self(ROBOT_ID.to_string())
    }

    pub fn from_parts(category: &str, index: u32) -> Self {
        Self(format!("{category}_{index:02}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_robot(&self) -> bool {
        self.0 == ROBOT_ID
    }

    /// Splits `<category>_<NN>` into its parts.
    pub fn split(&self) -> Option<(&str, u32)> {
        let (cat, idx) = self.0.rsplit_once('_')?;
        if cat.is_empty() || idx.len() != 2 || !idx.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let first = cat.chars().next()?;
        if !first.is_ascii_alphabetic()
            || !cat
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return None;
        }
        Some((cat, idx.parse().ok()?))
    }

    pub fn category(&self) -> Option<&str> {
        self.split().map(|(c, _)| c)
    }

    pub fn is_well_formed(&self) -> bool {
        self.split().is_some()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Unary object states. Variants are declared alphabetically so that the
/// derived order matches the serialized order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryState {
    Closed,
    Empty,
    Folded,
    Full,
    Off,
    On,
    Open,
    Unfolded,
}

impl UnaryState {
    pub const ALL: [UnaryState; 8] = [
        UnaryState::Closed,
        UnaryState::Empty,
        UnaryState::Folded,
        UnaryState::Full,
        UnaryState::Off,
        UnaryState::On,
        UnaryState::Open,
        UnaryState::Unfolded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UnaryState::Closed => "closed",
            UnaryState::Empty => "empty",
            UnaryState::Folded => "folded",
            UnaryState::Full => "full",
            UnaryState::Off => "off",
            UnaryState::On => "on",
            UnaryState::Open => "open",
            UnaryState::Unfolded => "unfolded",
        }
    }

    /// The mutually exclusive state this one pairs with.
    pub fn opposite(self) -> UnaryState {
        match self {
            UnaryState::Open => UnaryState::Closed,
            UnaryState::Closed => UnaryState::Open,
            UnaryState::On => UnaryState::Off,
            UnaryState::Off => UnaryState::On,
            UnaryState::Empty => UnaryState::Full,
            UnaryState::Full => UnaryState::Empty,
            UnaryState::Folded => UnaryState::Unfolded,
            UnaryState::Unfolded => UnaryState::Folded,
        }
    }
}

impl fmt::Display for UnaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnaryState {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self> {
        UnaryState::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SceneError::UnknownPredicate(s.to_string()))
    }
}

/// Canonical binary predicates, in serialized lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predicate {
    Beside,
    Holding,
    Inside,
    #[serde(rename = "ontop")]
    OnTop,
}

impl Predicate {
    pub const SPATIAL: [Predicate; 3] = [Predicate::OnTop, Predicate::Inside, Predicate::Beside];

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::Beside => "beside",
            Predicate::Holding => "holding",
            Predicate::Inside => "inside",
            Predicate::OnTop => "ontop",
        }
    }

    pub fn is_spatial(self) -> bool {
        self != Predicate::Holding
    }

    /// Resolves a predicate token, including aliases. The boolean is true
    /// when the alias is stated in the reverse direction (`under`, `contains`)
    /// and the endpoints must be swapped.
    pub fn resolve(token: &str) -> Result<(Predicate, bool)> {
        let t = token.trim().to_ascii_lowercase();
        let resolved = match t.as_str() {
            "ontop" | "on_top" | "on" | "up" | "stack" | "stacked" => (Predicate::OnTop, false),
            "under" | "below" => (Predicate::OnTop, true),
            "inside" | "in" => (Predicate::Inside, false),
            "contains" => (Predicate::Inside, true),
            "beside" | "adjacent" | "next_to" => (Predicate::Beside, false),
            "holding" | "grasping" => (Predicate::Holding, false),
            _ => return Err(SceneError::UnknownPredicate(token.to_string())),
        };
        Ok(resolved)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub name: String,
    pub position: [f64; 3],
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Articulation {
    pub joint_value: f64,
    pub joint_min: f64,
    pub joint_max: f64,
    /// Joint values strictly above this count as open.
    pub open_threshold: f64,
}

impl Articulation {
    pub fn is_open(&self) -> bool {
        self.joint_value > self.open_threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectNode {
    pub id: NodeId,
    pub category: String,
    pub pose: Pose,
    pub aabb: Aabb,
    pub keypoints: Vec<Keypoint>,
    pub children: Vec<NodeId>,
    pub articulation: Option<Articulation>,
    pub states: BTreeSet<UnaryState>,
    pub attributes: BTreeMap<String, String>,
}

impl ObjectNode {
    /// A node whose category is taken from the id prefix and whose box sits
    /// at `aabb`. Pose is the box center.
    pub fn new(id: impl Into<NodeId>, aabb: Aabb) -> Self {
        let id = id.into();
        let category = id.category().unwrap_or(id.as_str()).to_string();
        Self {
            pose: Pose::at(aabb.center()),
            id,
            category,
            aabb,
            keypoints: Vec::new(),
            children: Vec::new(),
            articulation: None,
            states: BTreeSet::new(),
            attributes: BTreeMap::new(),
        }
    }

    /// Placeholder for an id that appears only in edges.
    pub fn stub(id: NodeId) -> Self {
        Self::new(id, Aabb::new([0.0; 3], [0.0; 3]))
    }

    pub fn with_attr(mut self, key: &str, value: &str) -> Self {
        self.attributes.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_state(mut self, state: UnaryState) -> Self {
        self.states.remove(&state.opposite());
        self.states.insert(state);
        self
    }

    pub fn with_articulation(mut self, art: Articulation) -> Self {
        let st = if art.is_open() {
            UnaryState::Open
        } else {
            UnaryState::Closed
        };
        self.articulation = Some(art);
        self.with_state(st)
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    /// Semantic kind (e.g. `cube` for `red_cube_03`); falls back to category.
    pub fn kind(&self) -> &str {
        self.attr("kind").unwrap_or(&self.category)
    }

    pub fn has_state(&self, state: UnaryState) -> bool {
        self.states.contains(&state)
    }

    /// Moves the node so its box is `aabb`, keeping the pose at the box center.
    pub fn move_to(&mut self, aabb: Aabb) {
        let old = self.aabb.center();
        let new = aabb.center();
        let delta = [new[0] - old[0], new[1] - old[1], new[2] - old[2]];
        for kp in &mut self.keypoints {
            for (p, d) in kp.position.iter_mut().zip(delta) {
                *p += d;
            }
        }
        self.pose.position = new;
        self.aabb = aabb;
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SceneError::Schema(format!("node `{}`: {m}", self.id)));
        match self.id.split() {
            Some((cat, _)) if cat == self.category => {}
            Some(_) => return bad(format!("id does not match category `{}`", self.category)),
            None => return bad("id is not of the form <category>_<NN>".into()),
        }
        if !self.pose.is_unit() {
            return bad("orientation is not a unit quaternion".into());
        }
        if !self.aabb.is_valid() {
            return bad("aabb min exceeds max".into());
        }
        let mut names = BTreeSet::new();
        for kp in &self.keypoints {
            if !names.insert(kp.name.as_str()) {
                return bad(format!("duplicate keypoint `{}`", kp.name));
            }
        }
        for st in &self.states {
            if *st < st.opposite() && self.states.contains(&st.opposite()) {
                return bad(format!("conflicting states {st} and {}", st.opposite()));
            }
        }
        if let Some(a) = &self.articulation {
            if !(a.joint_min <= a.joint_value && a.joint_value <= a.joint_max) {
                return bad("joint value outside its limits".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub subject: NodeId,
    pub predicate: Predicate,
    pub object: NodeId,
}

impl RelationEdge {
    pub fn new(subject: impl Into<NodeId>, predicate: Predicate, object: impl Into<NodeId>) -> Self {
        Self {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }

    pub fn holding(object: impl Into<NodeId>) -> Self {
        Self::new(NodeId::robot(), Predicate::Holding, object)
    }

    /// `beside` is symmetric; its canonical subject is the smaller id.
    pub fn canonical(mut self) -> Self {
        if self.predicate == Predicate::Beside && self.subject > self.object {
            std::mem::swap(&mut self.subject, &mut self.object);
        }
        self
    }

    pub fn involves(&self, id: &NodeId) -> bool {
        &self.subject == id || &self.object == id
    }
}

impl fmt::Display for RelationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// One atomic fact: a relation or a unary state of a node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fact {
    Relation(RelationEdge),
    State { node: NodeId, state: UnaryState },
}

impl Fact {
    pub fn state(node: impl Into<NodeId>, state: UnaryState) -> Self {
        Fact::State {
            node: node.into(),
            state,
        }
    }

    pub fn nodes(&self) -> Vec<&NodeId> {
        match self {
            Fact::Relation(e) => vec![&e.subject, &e.object],
            Fact::State { node, .. } => vec![node],
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Relation(e) => e.fmt(f),
            Fact::State { node, state } => write!(f, "{node} {state}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub gripper_value: f64,
    pub gripper_threshold: f64,
    pub held_object: Option<NodeId>,
}

impl RobotState {
    pub const DEFAULT_THRESHOLD: f64 = 0.5;

    pub fn empty() -> Self {
        Self {
            gripper_value: 0.0,
            gripper_threshold: Self::DEFAULT_THRESHOLD,
            held_object: None,
        }
    }

    pub fn grasping(object: impl Into<NodeId>) -> Self {
        Self {
            gripper_value: 1.0,
            gripper_threshold: Self::DEFAULT_THRESHOLD,
            held_object: Some(object.into()),
        }
    }

    pub fn is_grasping(&self) -> bool {
        self.gripper_value > self.gripper_threshold
    }
}

impl Default for RobotState {
    fn default() -> Self {
        Self::empty()
    }
}

/// Object nodes, canonical relation edges and the robot state.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SceneGraph {
    nodes: BTreeMap<NodeId, ObjectNode>,
    edges: BTreeSet<RelationEdge>,
    robot: RobotState,
}

impl SceneGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds and validates a graph in one step.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = ObjectNode>,
        edges: impl IntoIterator<Item = RelationEdge>,
        robot: RobotState,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for n in nodes {
            if map.contains_key(&n.id) {
                return Err(SceneError::DuplicateNode(n.id));
            }
            map.insert(n.id.clone(), n);
        }
        let sg = Self {
            nodes: map,
            edges: edges.into_iter().collect(),
            robot,
        };
        sg.validate()?;
        Ok(sg)
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, ObjectNode> {
        &self.nodes
    }

    pub fn node(&self, id: &NodeId) -> Option<&ObjectNode> {
        self.nodes.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edges(&self) -> &BTreeSet<RelationEdge> {
        &self.edges
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn held(&self) -> Option<&NodeId> {
        self.robot.held_object.as_ref()
    }

    pub fn has_edge(&self, edge: &RelationEdge) -> bool {
        self.edges.contains(edge)
    }

    pub fn holds(&self, fact: &Fact) -> bool {
        match fact {
            Fact::Relation(e) => self.edges.contains(e),
            Fact::State { node, state } => {
                self.nodes.get(node).is_some_and(|n| n.states.contains(state))
            }
        }
    }

    /// All relation edges and unary states as facts.
    pub fn facts(&self) -> BTreeSet<Fact> {
        let mut out: BTreeSet<Fact> = self.edges.iter().cloned().map(Fact::Relation).collect();
        for n in self.nodes.values() {
            for s in &n.states {
                out.insert(Fact::state(n.id.clone(), *s));
            }
        }
        out
    }

    /// Equality over edges, unary states and the held object, ignoring geometry.
    pub fn relationally_equal(&self, other: &SceneGraph) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.keys().eq(other.nodes.keys())
            && self.robot.held_object == other.robot.held_object
            && self.facts() == other.facts()
    }

    pub fn edges_of<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a RelationEdge> + 'a {
        self.edges.iter().filter(move |e| e.involves(id))
    }

    /// Subjects `x` with `x <predicate> object`.
    pub fn subjects_of(&self, predicate: Predicate, object: &NodeId) -> Vec<&NodeId> {
        self.edges
            .iter()
            .filter(|e| e.predicate == predicate && &e.object == object)
            .map(|e| &e.subject)
            .collect()
    }

    /// Objects `y` with `subject <predicate> y`.
    pub fn objects_of(&self, subject: &NodeId, predicate: Predicate) -> Vec<&NodeId> {
        self.edges
            .iter()
            .filter(|e| e.predicate == predicate && &e.subject == subject)
            .map(|e| &e.object)
            .collect()
    }

    pub fn parent_of(&self, id: &NodeId) -> Option<&NodeId> {
        self.nodes
            .values()
            .find(|n| n.children.contains(id))
            .map(|n| &n.id)
    }

    pub fn insert_node(&mut self, node: ObjectNode) -> Result<()> {
        if self.nodes.contains_key(&node.id) {
            return Err(SceneError::DuplicateNode(node.id));
        }
        node.validate()?;
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Inserts an edge after checking endpoints and the holding rules.
    pub fn insert_edge(&mut self, edge: RelationEdge) -> Result<bool> {
        let edge = edge.canonical();
        self.check_edge(&edge)?;
        if edge.predicate == Predicate::Holding {
            match &self.robot.held_object {
                Some(h) if h != &edge.object => {
                    return Err(SceneError::Schema(format!(
                        "gripper already holds `{h}`"
                    )))
                }
                _ => self.robot.held_object = Some(edge.object.clone()),
            }
        }
        Ok(self.edges.insert(edge))
    }

    pub fn remove_edge(&mut self, edge: &RelationEdge) -> bool {
        let removed = self.edges.remove(edge);
        if removed && edge.predicate == Predicate::Holding {
            self.robot.held_object = None;
        }
        removed
    }

    pub(crate) fn node_mut(&mut self, id: &NodeId) -> Option<&mut ObjectNode> {
        self.nodes.get_mut(id)
    }

    pub(crate) fn robot_mut(&mut self) -> &mut RobotState {
        &mut self.robot
    }

    fn check_edge(&self, e: &RelationEdge) -> Result<()> {
        if e.subject == e.object {
            return Err(SceneError::Schema(format!("self-loop on `{}`", e.subject)));
        }
        match e.predicate {
            Predicate::Holding => {
                if !e.subject.is_robot() {
                    return Err(SceneError::Schema(format!(
                        "holding edge must start at `{ROBOT_ID}`, found `{}`",
                        e.subject
                    )));
                }
            }
            _ => {
                if !self.nodes.contains_key(&e.subject) {
                    return Err(SceneError::UnknownNode(e.subject.clone()));
                }
                if e.predicate == Predicate::Beside && e.subject > e.object {
                    return Err(SceneError::Schema(format!("non-canonical beside edge {e}")));
                }
            }
        }
        if !self.nodes.contains_key(&e.object) {
            return Err(SceneError::UnknownNode(e.object.clone()));
        }
        Ok(())
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        for n in self.nodes.values() {
            n.validate()?;
            for c in &n.children {
                if !self.nodes.contains_key(c) {
                    return Err(SceneError::UnknownNode(c.clone()));
                }
            }
        }
        if let Some(cycle_at) = self.find_child_cycle() {
            return Err(SceneError::Schema(format!("children of `{cycle_at}` form a cycle")));
        }
        let mut holding = Vec::new();
        for e in &self.edges {
            self.check_edge(e)?;
            if e.predicate == Predicate::Holding {
                holding.push(&e.object);
            }
        }
        match (holding.as_slice(), &self.robot.held_object) {
            ([], None) => {}
            ([h], Some(held)) if *h == held => {}
            _ => {
                return Err(SceneError::Schema(
                    "held object disagrees with holding edges".into(),
                ))
            }
        }
        Ok(())
    }

    fn find_child_cycle(&self) -> Option<&NodeId> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark: BTreeMap<&NodeId, u8> = BTreeMap::new();
        fn visit<'a>(
            sg: &'a SceneGraph,
            id: &'a NodeId,
            mark: &mut BTreeMap<&'a NodeId, u8>,
        ) -> bool {
            match mark.get(id) {
                Some(1) => return true,
                Some(2) => return false,
                _ => {}
            }
            mark.insert(id, 1);
            if let Some(n) = sg.nodes.get(id) {
                for c in &n.children {
                    if visit(sg, c, mark) {
                        return true;
                    }
                }
            }
            mark.insert(id, 2);
            false
        }
        self.nodes.keys().find(|id| visit(self, id, &mut mark))
    }

    /// True when `ancestor` reaches `id` through children links.
    pub fn is_descendant(&self, id: &NodeId, ancestor: &NodeId) -> bool {
        let mut stack: Vec<&NodeId> = match self.nodes.get(ancestor) {
            Some(n) => n.children.iter().collect(),
            None => return false,
        };
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if c == id {
                return true;
            }
            if seen.insert(c) {
                if let Some(n) = self.nodes.get(c) {
                    stack.extend(n.children.iter());
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(id: &str) -> ObjectNode {
        ObjectNode::new(id, Aabb::new([0.0; 3], [0.05; 3]))
    }

    #[test]
    fn node_ids_split_category_and_index() {
        let id = NodeId::new("red_cube_03");
        assert_eq!(id.split(), Some(("red_cube", 3)));
        assert!(!NodeId::new("apple").is_well_formed());
        assert!(!NodeId::new("apple_1").is_well_formed());
        assert!(!NodeId::new("_01").is_well_formed());
    }

    #[test]
    fn edges_must_reference_nodes() {
        let mut sg = SceneGraph::new();
        sg.insert_node(cube("cube_01")).unwrap();
        let err = sg
            .insert_edge(RelationEdge::new("cube_01", Predicate::OnTop, "table_01"))
            .unwrap_err();
        assert_eq!(err, SceneError::UnknownNode("table_01".into()));
    }

    #[test]
    fn holding_tracks_held_object() {
        let mut sg = SceneGraph::new();
        sg.insert_node(cube("cube_01")).unwrap();
        sg.insert_node(cube("cube_02")).unwrap();
        sg.insert_edge(RelationEdge::holding("cube_01")).unwrap();
        assert_eq!(sg.held(), Some(&NodeId::new("cube_01")));
        assert!(sg.insert_edge(RelationEdge::holding("cube_02")).is_err());
        sg.remove_edge(&RelationEdge::holding("cube_01"));
        assert_eq!(sg.held(), None);
        sg.validate().unwrap();
    }

    #[test]
    fn conflicting_states_rejected() {
        let mut n = cube("box_01");
        n.states.insert(UnaryState::Open);
        n.states.insert(UnaryState::Closed);
        assert!(matches!(n.validate(), Err(SceneError::Schema(_))));
    }

    #[test]
    fn child_cycles_rejected() {
        let mut a = cube("a_01");
        let mut b = cube("b_01");
        a.children.push("b_01".into());
        b.children.push("a_01".into());
        assert!(SceneGraph::from_parts([a, b], [], RobotState::empty()).is_err());
    }

    #[test]
    fn beside_is_canonicalized_by_id() {
        let e = RelationEdge::new("b_01", Predicate::Beside, "a_01").canonical();
        assert_eq!(e.subject.as_str(), "a_01");
    }

    #[test]
    fn predicate_aliases() {
        assert_eq!(Predicate::resolve("under").unwrap(), (Predicate::OnTop, true));
        assert_eq!(Predicate::resolve("Contains").unwrap(), (Predicate::Inside, true));
        assert_eq!(Predicate::resolve("stack").unwrap(), (Predicate::OnTop, false));
        assert_eq!(Predicate::resolve("in").unwrap(), (Predicate::Inside, false));
        assert!(matches!(
            Predicate::resolve("levitating"),
            Err(SceneError::UnknownPredicate(_))
        ));
    }
}
