//! Text forms of a scene graph.
//!
//! The structured form is a single JSON document; nodes and edges are
//! sorted so that equal graphs serialize to equal bytes. Unary states ride
//! in the `edges` array with a null `object`. The prompt-text form is a
//! sorted line-per-fact rendering meant for language-model prompts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::error::{Result, SceneError};
use super::geometry::{Aabb, Pose};
use super::model::{
    Articulation, Keypoint, NodeId, ObjectNode, Predicate, RelationEdge, RobotState, SceneGraph,
    UnaryState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Structured,
    PromptText,
}

/// Wire form of one node. Missing fields take defaults so hand-written
/// documents stay short.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireNode {
    pub id: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub pose: Pose,
    #[serde(default = "zero_box")]
    pub aabb: Aabb,
    #[serde(default)]
    pub keypoints: Vec<Keypoint>,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default)]
    pub states: Vec<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub articulation: Option<Articulation>,
}

fn zero_box() -> Aabb {
    Aabb::new([0.0; 3], [0.0; 3])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireEdge {
    pub subject: String,
    pub predicate: String,
    #[serde(default)]
    pub object: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRobot {
    #[serde(default)]
    pub gripper_value: f64,
    #[serde(default = "default_threshold")]
    pub gripper_threshold: f64,
    #[serde(default)]
    pub held_object: Option<String>,
}

fn default_threshold() -> f64 {
    RobotState::DEFAULT_THRESHOLD
}

impl Default for WireRobot {
    fn default() -> Self {
        Self {
            gripper_value: 0.0,
            gripper_threshold: default_threshold(),
            held_object: None,
        }
    }
}

/// An unvalidated scene graph as read from text: predicates may be
/// aliases, edges may name missing nodes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSceneGraph {
    #[serde(default)]
    pub nodes: Vec<WireNode>,
    #[serde(default)]
    pub edges: Vec<WireEdge>,
    #[serde(default)]
    pub robot: WireRobot,
}

impl WireNode {
    fn from_node(n: &ObjectNode) -> Self {
        Self {
            id: n.id.to_string(),
            category: n.category.clone(),
            pose: n.pose.clone(),
            aabb: n.aabb.clone(),
            keypoints: n.keypoints.clone(),
            children: n.children.iter().map(|c| c.to_string()).collect(),
            states: n.states.iter().map(|s| s.to_string()).collect(),
            attributes: n.attributes.clone(),
            articulation: n.articulation.clone(),
        }
    }

    /// Converts to a node; state tokens must be known.
    pub(crate) fn to_node(&self) -> Result<ObjectNode> {
        let id = NodeId::new(self.id.clone());
        let category = if self.category.is_empty() {
            id.category().unwrap_or(&self.id).to_string()
        } else {
            self.category.clone()
        };
        let states = self
            .states
            .iter()
            .map(|s| s.parse::<UnaryState>())
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(ObjectNode {
            id,
            category,
            pose: self.pose.clone(),
            aabb: self.aabb.clone(),
            keypoints: self.keypoints.clone(),
            children: self.children.iter().map(|c| NodeId::new(c.clone())).collect(),
            articulation: self.articulation.clone(),
            states,
            attributes: self.attributes.clone(),
        })
    }
}

impl RawSceneGraph {
    /// Wire form with nodes and edges in canonical sorted order.
    pub fn from_graph(sg: &SceneGraph) -> Self {
        let nodes = sg.nodes().values().map(WireNode::from_node).collect();
        let mut edges: Vec<WireEdge> = sg
            .edges()
            .iter()
            .map(|e| WireEdge {
                subject: e.subject.to_string(),
                predicate: e.predicate.to_string(),
                object: Some(e.object.to_string()),
            })
            .collect();
        for n in sg.nodes().values() {
            for s in &n.states {
                edges.push(WireEdge {
                    subject: n.id.to_string(),
                    predicate: s.to_string(),
                    object: None,
                });
            }
        }
        sort_edges(&mut edges);
        let r = sg.robot();
        Self {
            nodes,
            edges,
            robot: WireRobot {
                gripper_value: r.gripper_value,
                gripper_threshold: r.gripper_threshold,
                held_object: r.held_object.as_ref().map(|h| h.to_string()),
            },
        }
    }

    /// Strict conversion: canonical predicates only, all invariants checked.
    pub fn to_graph(&self) -> Result<SceneGraph> {
        let nodes = self
            .nodes
            .iter()
            .map(WireNode::to_node)
            .collect::<Result<Vec<_>>>()?;
        let mut nodes_by_id: BTreeMap<NodeId, ObjectNode> = BTreeMap::new();
        for n in nodes {
            if nodes_by_id.contains_key(&n.id) {
                return Err(SceneError::DuplicateNode(n.id));
            }
            nodes_by_id.insert(n.id.clone(), n);
        }
        let mut edges = BTreeSet::new();
        for e in &self.edges {
            match &e.object {
                None => {
                    let st: UnaryState = e.predicate.parse()?;
                    let node = nodes_by_id
                        .get_mut(e.subject.as_str())
                        .ok_or_else(|| SceneError::UnknownNode(NodeId::new(e.subject.clone())))?;
                    node.states.insert(st);
                }
                Some(obj) => {
                    let (p, reversed) = Predicate::resolve(&e.predicate)?;
                    if reversed || p.as_str() != e.predicate {
                        return Err(SceneError::Schema(format!(
                            "non-canonical predicate `{}`",
                            e.predicate
                        )));
                    }
                    edges.insert(RelationEdge::new(e.subject.as_str(), p, obj.as_str()));
                }
            }
        }
        let robot = RobotState {
            gripper_value: self.robot.gripper_value,
            gripper_threshold: self.robot.gripper_threshold,
            held_object: self.robot.held_object.as_deref().map(NodeId::from),
        };
        SceneGraph::from_parts(nodes_by_id.into_values(), edges, robot)
    }
}

pub(crate) fn sort_edges(edges: &mut [WireEdge]) {
    edges.sort_by(|a, b| {
        (&a.subject, &a.predicate, a.object.as_deref().unwrap_or(""))
            .cmp(&(&b.subject, &b.predicate, b.object.as_deref().unwrap_or("")))
    });
}

/// Structured form as a JSON value (for embedding in larger documents).
pub fn to_value(sg: &SceneGraph) -> serde_json::Value {
    serde_json::to_value(RawSceneGraph::from_graph(sg)).expect("scene graph is always serializable")
}

pub fn serialize(sg: &SceneGraph, format: Format) -> String {
    match format {
        Format::Structured => serde_json::to_string(&RawSceneGraph::from_graph(sg))
            .expect("scene graph is always serializable"),
        Format::PromptText => prompt_text(sg),
    }
}

fn prompt_text(sg: &SceneGraph) -> String {
    let mut out = String::from("nodes:\n");
    for n in sg.nodes().values() {
        let _ = write!(out, "- {}", n.id);
        if !n.attributes.is_empty() {
            let attrs: Vec<String> = n.attributes.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = write!(out, " [{}]", attrs.join(", "));
        }
        out.push('\n');
    }
    out.push_str("edges:\n");
    let raw = RawSceneGraph::from_graph(sg);
    for e in &raw.edges {
        match &e.object {
            Some(o) => {
                let _ = writeln!(out, "{} {} {}", e.subject, e.predicate, o);
            }
            None => {
                let _ = writeln!(out, "{} {}", e.subject, e.predicate);
            }
        }
    }
    out
}

/// Strict parse of the structured form.
pub fn parse(text: &str) -> Result<SceneGraph> {
    parse_raw_json(text)?.to_graph()
}

pub fn from_value(value: &serde_json::Value) -> Result<SceneGraph> {
    let raw: RawSceneGraph =
        serde_json::from_value(value.clone()).map_err(|e| SceneError::Schema(e.to_string()))?;
    raw.to_graph()
}

fn parse_raw_json(text: &str) -> Result<RawSceneGraph> {
    serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            SceneError::Schema(e.to_string())
        } else {
            SceneError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    })
}

/// Reads either text form into an unvalidated graph. Prompt-text lines may
/// use `A pred B`, `A(pred)B`, or `A state`; node lines are `- id [k=v, ...]`.
pub fn parse_lenient(text: &str) -> Result<RawSceneGraph> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_raw_json(text);
    }
    let paren = Regex::new(r"^([A-Za-z0-9_]+)\s*\(\s*([A-Za-z_]+)\s*\)\s*([A-Za-z0-9_]+)$")
        .expect("valid regex");
    let node_line = Regex::new(r"^-\s*([A-Za-z0-9_]+)\s*(?:\[(.*)\])?$").expect("valid regex");
    let mut raw = RawSceneGraph::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches(['.', ',', ';']);
        let lower = line.to_ascii_lowercase();
        if line.is_empty() || matches!(lower.as_str(), "nodes:" | "edges:" | "objects:" | "relations:")
        {
            continue;
        }
        if let Some(c) = node_line.captures(line) {
            let mut attributes = BTreeMap::new();
            if let Some(attrs) = c.get(2) {
                for kv in attrs.as_str().split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| SceneError::Parse {
                        line: i + 1,
                        column: 1,
                        message: format!("attribute `{kv}` is not key=value"),
                    })?;
                    attributes.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            raw.nodes.push(WireNode {
                id: c[1].to_string(),
                category: String::new(),
                pose: Pose::default(),
                aabb: zero_box(),
                keypoints: Vec::new(),
                children: Vec::new(),
                states: Vec::new(),
                attributes,
                articulation: None,
            });
            continue;
        }
        if let Some(c) = paren.captures(line) {
            raw.edges.push(WireEdge {
                subject: c[1].to_string(),
                predicate: c[2].to_string(),
                object: Some(c[3].to_string()),
            });
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [s, p] => raw.edges.push(WireEdge {
                subject: s.to_string(),
                predicate: p.to_string(),
                object: None,
            }),
            [s, p, o] => raw.edges.push(WireEdge {
                subject: s.to_string(),
                predicate: p.to_string(),
                object: Some(o.to_string()),
            }),
            _ => {
                return Err(SceneError::Parse {
                    line: i + 1,
                    column: 1,
                    message: format!("expected `subject predicate [object]`, found `{line}`"),
                })
            }
        }
    }
    Ok(raw)
}

/// Scene graphs embed as the structured wire form.
impl Serialize for SceneGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSceneGraph::from_graph(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SceneGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawSceneGraph::deserialize(d)?
            .to_graph()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> SceneGraph {
        let cube = ObjectNode::new("cube_01", Aabb::new([0.0, 0.0, 0.1], [0.05, 0.05, 0.15]))
            .with_attr("color", "red");
        let table = ObjectNode::new("table_01", Aabb::new([-1.0, -1.0, 0.0], [1.0, 1.0, 0.1]));
        SceneGraph::from_parts(
            [cube, table],
            [RelationEdge::new("cube_01", Predicate::OnTop, "table_01")],
            RobotState::empty(),
        )
        .unwrap()
    }

    #[test]
    fn structured_output_has_canonical_edge() {
        let text = serialize(&simple(), Format::Structured);
        assert!(text.contains(
            r#""edges":[{"subject":"cube_01","predicate":"ontop","object":"table_01"}]"#
        ));
        assert_eq!(parse(&text).unwrap(), simple());
    }

    #[test]
    fn empty_graph_serializes_empty_arrays() {
        let text = serialize(&SceneGraph::new(), Format::Structured);
        assert!(text.contains(r#""nodes":[]"#));
        assert!(text.contains(r#""edges":[]"#));
        assert_eq!(parse(&text).unwrap(), SceneGraph::new());
    }

    #[test]
    fn prompt_text_is_line_per_fact() {
        let text = serialize(&simple(), Format::PromptText);
        assert_eq!(
            text,
            "nodes:\n- cube_01 [color=red]\n- table_01\nedges:\ncube_01 ontop table_01\n"
        );
    }

    #[test]
    fn unary_states_ride_in_edges_with_null_object() {
        let b = ObjectNode::new("box_01", Aabb::new([0.0; 3], [0.2; 3])).with_state(UnaryState::Open);
        let sg = SceneGraph::from_parts([b], [], RobotState::empty()).unwrap();
        let text = serialize(&sg, Format::Structured);
        assert!(text.contains(r#"{"subject":"box_01","predicate":"open","object":null}"#));
        assert_eq!(parse(&text).unwrap(), sg);
    }

    #[test]
    fn malformed_json_reports_position() {
        match parse("{\"nodes\": [\n  {\"id\": }\n]}") {
            Err(SceneError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_violations_are_schema_errors() {
        let text = r#"{"nodes":[{"id":"cube_01"}],"edges":[{"subject":"cube_01","predicate":"ontop","object":"table_01"}]}"#;
        assert_eq!(parse(text).unwrap_err(), SceneError::UnknownNode("table_01".into()));
        let text = r#"{"nodes":[{"id":"a_01"},{"id":"b_01"}],"edges":[{"subject":"b_01","predicate":"under","object":"a_01"}]}"#;
        assert!(matches!(parse(text), Err(SceneError::Schema(_))));
        let text = r#"{"nodes":"nope","edges":[]}"#;
        assert!(matches!(parse(text), Err(SceneError::Schema(_))));
    }

    #[test]
    fn lenient_parser_reads_prompt_text_and_paren_forms() {
        let raw = parse_lenient("nodes:\n- a_01 [color=red]\nedges:\na_01 ontop b_01\nb_01(under)a_01\nc_01 open\n")
            .unwrap();
        assert_eq!(raw.nodes.len(), 1);
        assert_eq!(raw.edges.len(), 3);
        assert_eq!(raw.edges[1].predicate, "under");
        let err = parse_lenient("a_01 sits on the b_01 today").unwrap_err();
        assert!(matches!(err, SceneError::Parse { line: 1, .. }));
    }
}
