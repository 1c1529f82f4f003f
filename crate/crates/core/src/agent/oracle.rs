//! Greedy per-fact breadth-first planner over the symbolic engine.
//!
//! Each call searches for the shortest action sequence that makes one more
//! goal fact true without undoing any fact that already holds. Only
//! commands touching goal-relevant objects and their blockers are expanded.

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{AgentError, Policy, PolicyQuery, PolicyResponse};
use crate::engine::{
    is_drawer, open_drawers_above, preconditions_with, transition_with, ActionCommand,
    EngineConfig, GoalSpec, Verb,
};
use crate::scene::{self, Fact, NodeId, Predicate, SceneGraph, UnaryState};

pub const DEFAULT_EXPANSION_CAP: usize = 50_000;

#[derive(Clone, Debug)]
pub struct OracleAgent {
    pub expansion_cap: usize,
    pub engine: EngineConfig,
}

impl Default for OracleAgent {
    fn default() -> Self {
        Self {
            expansion_cap: DEFAULT_EXPANSION_CAP,
            engine: EngineConfig::default(),
        }
    }
}

impl OracleAgent {
    /// The next command for an observed graph, or `end`.
    pub fn next_action(&self, observed: &SceneGraph, goal: &GoalSpec) -> ActionCommand {
        match plan_with(observed, goal, self.expansion_cap, &self.engine) {
            Some(p) => p.into_iter().next().unwrap_or_else(ActionCommand::end),
            None => ActionCommand::end(),
        }
    }
}

impl Policy for OracleAgent {
    fn id(&self) -> String {
        "oracle".into()
    }

    fn respond(&mut self, query: &PolicyQuery, goal: &GoalSpec) -> Result<PolicyResponse, AgentError> {
        let observed = scene::parse(&query.observation).or_else(|_| {
            scene::parse_lenient(&query.observation).and_then(|raw| scene::normalize(&raw))
        });
        let cmd = match observed {
            Ok(sg) => self.next_action(&sg, goal),
            Err(_) => ActionCommand::end(),
        };
        Ok(PolicyResponse::text(cmd.to_string()))
    }
}

/// Facts that define a search state: everything but `beside`, plus the held object.
type StateKey = (Vec<Fact>, Option<NodeId>);

fn key(sg: &SceneGraph) -> StateKey {
    let facts = sg
        .facts()
        .into_iter()
        .filter(|f| !matches!(f, Fact::Relation(e) if e.predicate == Predicate::Beside))
        .collect();
    (facts, sg.held().cloned())
}

/// Objects whose movement or articulation may be needed for `open` facts.
struct Relevance {
    movers: BTreeSet<NodeId>,
    articulated: BTreeSet<NodeId>,
    on_targets: BTreeSet<NodeId>,
    in_targets: BTreeSet<NodeId>,
    switches: BTreeSet<NodeId>,
}

fn relevance(sg: &SceneGraph, open: &[Fact]) -> Relevance {
    let mut r = Relevance {
        movers: BTreeSet::new(),
        articulated: BTreeSet::new(),
        on_targets: BTreeSet::new(),
        in_targets: BTreeSet::new(),
        switches: BTreeSet::new(),
    };
    for f in open {
        match f {
            Fact::Relation(e) => {
                if !e.subject.is_robot() {
                    r.movers.insert(e.subject.clone());
                }
                match e.predicate {
                    Predicate::OnTop => {
                        r.on_targets.insert(e.object.clone());
                    }
                    Predicate::Inside => {
                        r.in_targets.insert(e.object.clone());
                        r.articulated.insert(e.object.clone());
                    }
                    Predicate::Holding => {
                        r.movers.insert(e.object.clone());
                    }
                    Predicate::Beside => {}
                }
            }
            Fact::State { node, state } => match state {
                UnaryState::Open | UnaryState::Closed => {
                    r.articulated.insert(node.clone());
                }
                UnaryState::On | UnaryState::Off => {
                    r.switches.insert(node.clone());
                }
                _ => {}
            },
        }
    }
    if let Some(h) = sg.held() {
        r.movers.insert(h.clone());
    }
    // containers of movers can be opened
    for m in r.movers.clone() {
        for c in sg.objects_of(&m, Predicate::Inside) {
            r.articulated.insert(c.clone());
        }
    }
    // anything stacked on a relevant object must be cleared first
    let mut frontier: Vec<NodeId> = r
        .movers
        .iter()
        .chain(&r.on_targets)
        .chain(&r.in_targets)
        .cloned()
        .collect();
    while let Some(x) = frontier.pop() {
        for s in sg.subjects_of(Predicate::OnTop, &x) {
            if r.movers.insert(s.clone()) {
                frontier.push(s.clone());
            }
        }
    }
    // open drawers above a relevant drawer obstruct it
    for a in r.articulated.clone() {
        if let Some(n) = sg.node(&a) {
            if is_drawer(n) {
                r.articulated.extend(open_drawers_above(sg, n).into_iter().cloned());
            }
        }
    }
    r
}

fn candidates(sg: &SceneGraph, r: &Relevance) -> Vec<ActionCommand> {
    let mut out = Vec::new();
    if sg.held().is_some() {
        for n in sg.nodes().values().filter(|n| n.kind() == "table") {
            out.push(ActionCommand::place_on(n.id.clone()));
        }
        out.extend(r.on_targets.iter().cloned().map(ActionCommand::place_on));
        out.extend(r.in_targets.iter().cloned().map(ActionCommand::place_inside));
    } else {
        out.extend(r.movers.iter().cloned().map(ActionCommand::pick));
    }
    for a in &r.articulated {
        out.push(ActionCommand::open(a.clone()));
        out.push(ActionCommand::close(a.clone()));
    }
    for s in &r.switches {
        out.push(ActionCommand::new(Verb::TurnOn, s.clone()));
        out.push(ActionCommand::new(Verb::TurnOff, s.clone()));
    }
    out.sort();
    out.dedup();
    out
}

/// Shortest plan to the nearest state with one more goal fact, keeping the
/// facts that already hold. `Some(vec![])` means the goal is satisfied.
pub fn plan(sg: &SceneGraph, goal: &GoalSpec, cap: usize) -> Option<Vec<ActionCommand>> {
    plan_with(sg, goal, cap, &EngineConfig::default())
}

pub(crate) fn plan_with(
    sg: &SceneGraph,
    goal: &GoalSpec,
    cap: usize,
    cfg: &EngineConfig,
) -> Option<Vec<ActionCommand>> {
    let atoms = goal.atoms(sg).ok()?;
    let (done, open): (Vec<Fact>, Vec<Fact>) = atoms.into_iter().partition(|f| sg.holds(f));
    if open.is_empty() {
        return Some(Vec::new());
    }

    // arena of (graph, parent, command)
    let mut arena: Vec<(SceneGraph, usize, Option<ActionCommand>)> = vec![(sg.clone(), 0, None)];
    let mut seen: HashSet<StateKey> = HashSet::new();
    seen.insert(key(sg));
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0usize;
    while let Some(i) = queue.pop_front() {
        if expanded >= cap {
            return None;
        }
        expanded += 1;
        let state = arena[i].0.clone();
        let open_here: Vec<Fact> = open.iter().filter(|f| !state.holds(f)).cloned().collect();
        let rel = relevance(&state, &open_here);
        for cmd in candidates(&state, &rel) {
            if !matches!(preconditions_with(&state, &cmd, cfg), Ok(f) if f.is_ok()) {
                continue;
            }
            let Ok(next) = transition_with(&state, &cmd, cfg) else {
                continue;
            };
            if !seen.insert(key(&next)) {
                continue;
            }
            let keeps = done.iter().all(|f| next.holds(f));
            let gains = open.iter().any(|f| next.holds(f));
            arena.push((next, i, Some(cmd)));
            let j = arena.len() - 1;
            if keeps && gains {
                let mut steps = Vec::new();
                let mut k = j;
                while k != 0 {
                    steps.push(arena[k].2.clone().expect("non-root has a command"));
                    k = arena[k].1;
                }
                steps.reverse();
                return Some(steps);
            }
            queue.push_back(j);
        }
    }
    None
}
