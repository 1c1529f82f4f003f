//! Goal specifications and satisfaction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scene::{Fact, NodeId, ObjectNode, Predicate, RelationEdge, SceneError, SceneGraph, UnaryState};

/// Selects nodes whose attributes take one of the listed values. The key
/// `kind` falls back to the node category when the attribute is absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectFilter {
    pub attributes: BTreeMap<String, BTreeSet<String>>,
}

impl ObjectFilter {
    pub fn with(mut self, key: &str, values: &[&str]) -> Self {
        self.attributes
            .insert(key.to_string(), values.iter().map(|v| v.to_string()).collect());
        self
    }

    pub fn matches(&self, node: &ObjectNode) -> bool {
        self.attributes.iter().all(|(k, vals)| {
            let v = if k == "kind" { Some(node.kind()) } else { node.attr(k) };
            v.is_some_and(|v| vals.contains(v))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseTarget {
    /// `x <predicate> object` for each matching `x`.
    Relation { predicate: Predicate, object: NodeId },
    State { state: UnaryState },
}

/// "Every object matching `filter` satisfies `target`."
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifiedClause {
    pub filter: ObjectFilter,
    pub target: ClauseTarget,
}

impl QuantifiedClause {
    pub fn inside(filter: ObjectFilter, container: impl Into<NodeId>) -> Self {
        Self {
            filter,
            target: ClauseTarget::Relation {
                predicate: Predicate::Inside,
                object: container.into(),
            },
        }
    }

    fn expand(&self, sg: &SceneGraph) -> Vec<Fact> {
        sg.nodes()
            .values()
            .filter(|n| self.filter.matches(n))
            .filter_map(|n| match &self.target {
                ClauseTarget::Relation { predicate, object } if object != &n.id => Some(
                    Fact::Relation(RelationEdge::new(n.id.clone(), *predicate, object.clone()).canonical()),
                ),
                ClauseTarget::Relation { .. } => None,
                ClauseTarget::State { state } => Some(Fact::state(n.id.clone(), *state)),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub instruction: String,
    #[serde(default)]
    pub predicates: BTreeSet<Fact>,
    #[serde(default)]
    pub clauses: Vec<QuantifiedClause>,
}

impl GoalSpec {
    pub fn new(instruction: impl Into<String>) -> Self {
        Self {
            instruction: instruction.into(),
            predicates: BTreeSet::new(),
            clauses: Vec::new(),
        }
    }

    pub fn with_fact(mut self, fact: Fact) -> Self {
        self.predicates.insert(fact);
        self
    }

    pub fn with_clause(mut self, clause: QuantifiedClause) -> Self {
        self.clauses.push(clause);
        self
    }

    pub fn is_well_formed(&self) -> bool {
        !(self.predicates.is_empty() && self.clauses.is_empty())
    }

    /// Every atomic fact the goal requires in `sg`: explicit predicates plus
    /// one fact per object matched by each quantified clause.
    pub fn atoms(&self, sg: &SceneGraph) -> Result<Vec<Fact>, SceneError> {
        let mut out: Vec<Fact> = Vec::new();
        let mut seen = BTreeSet::new();
        for f in &self.predicates {
            for n in f.nodes() {
                if !n.is_robot() && !sg.contains_node(n.as_str()) {
                    return Err(SceneError::UnknownNode(n.clone()));
                }
            }
            if seen.insert(f.clone()) {
                out.push(f.clone());
            }
        }
        for c in &self.clauses {
            if let ClauseTarget::Relation { object, .. } = &c.target {
                if !sg.contains_node(object.as_str()) {
                    return Err(SceneError::UnknownNode(object.clone()));
                }
            }
            for f in c.expand(sg) {
                if seen.insert(f.clone()) {
                    out.push(f);
                }
            }
        }
        Ok(out)
    }

    /// Node ids mentioned by the goal's atoms.
    pub fn relevant_objects(&self, sg: &SceneGraph) -> Result<BTreeSet<NodeId>, SceneError> {
        Ok(self
            .atoms(sg)?
            .iter()
            .flat_map(|f| f.nodes().into_iter().cloned())
            .filter(|n| !n.is_robot())
            .collect())
    }
}

/// True iff every explicit fact and every quantified clause holds.
pub fn satisfied(sg: &SceneGraph, goal: &GoalSpec) -> Result<bool, SceneError> {
    Ok(goal.atoms(sg)?.iter().all(|f| sg.holds(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Aabb, RobotState};

    fn scene(cubes: &[(&str, &str, bool)]) -> SceneGraph {
        let mut nodes = vec![ObjectNode::new("red_box_01", Aabb::new([0.0; 3], [0.4; 3]))
            .with_attr("kind", "box")
            .with_attr("color", "red")];
        let mut edges = vec![];
        for (id, color, inside) in cubes {
            nodes.push(
                ObjectNode::new(*id, Aabb::new([0.0; 3], [0.05; 3]))
                    .with_attr("kind", "cube")
                    .with_attr("color", color),
            );
            if *inside {
                edges.push(RelationEdge::new(*id, Predicate::Inside, "red_box_01"));
            }
        }
        SceneGraph::from_parts(nodes, edges, RobotState::empty()).unwrap()
    }

    fn red_cubes_in_box() -> GoalSpec {
        GoalSpec::new("Pick up all red cubes").with_clause(QuantifiedClause::inside(
            ObjectFilter::default().with("kind", &["cube"]).with("color", &["red"]),
            "red_box_01",
        ))
    }

    #[test]
    fn explicit_fact_membership() {
        let sg = scene(&[("red_cube_01", "red", true)]);
        let goal = GoalSpec::new("x").with_fact(Fact::Relation(RelationEdge::new(
            "red_cube_01",
            Predicate::Inside,
            "red_box_01",
        )));
        assert!(satisfied(&sg, &goal).unwrap());
    }

    #[test]
    fn quantified_clause_needs_every_match() {
        let sg = scene(&[
            ("red_cube_01", "red", true),
            ("red_cube_02", "red", false),
            ("blue_cube_01", "blue", false),
        ]);
        assert!(!satisfied(&sg, &red_cubes_in_box()).unwrap());
        assert_eq!(red_cubes_in_box().atoms(&sg).unwrap().len(), 2);
    }

    #[test]
    fn empty_match_set_is_vacuously_true() {
        let sg = scene(&[("blue_cube_01", "blue", false)]);
        assert!(satisfied(&sg, &red_cubes_in_box()).unwrap());
    }

    #[test]
    fn unknown_goal_node_is_an_error() {
        let sg = scene(&[]);
        let goal = GoalSpec::new("x").with_fact(Fact::state("ghost_99", UnaryState::Open));
        assert_eq!(
            satisfied(&sg, &goal).unwrap_err(),
            SceneError::UnknownNode("ghost_99".into())
        );
    }
}
