//! Response parsing and the step, grounding and termination rewards.
//!
//! The grader never executes actions. It scores a response against the
//! graph snapshot it was produced for.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    build_command, command_regex, end_regex, satisfied, strip_segment, ActionCommand, GoalSpec,
};
use crate::scene::{self, SceneGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub lambda_step: f64,
    pub lambda_grounding: f64,
    pub lambda_termination: f64,
    /// Penalty magnitude for multi-action responses.
    pub alpha: f64,
    /// Penalty magnitude for ending before the goal holds.
    pub beta: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lambda_step: 1.0,
            lambda_grounding: 1.0,
            lambda_termination: 1.0,
            alpha: 0.5,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("reward weight `{0}` must be a finite non-negative number")]
    InvalidWeight(&'static str),
    #[error("record is missing `{0}`")]
    MissingField(&'static str),
    #[error("invalid record: {0}")]
    Invalid(String),
}

impl RewardWeights {
    pub fn with_lambdas(l: [f64; 3]) -> Self {
        Self {
            lambda_step: l[0],
            lambda_grounding: l[1],
            lambda_termination: l[2],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let fields = [
            ("lambda_step", self.lambda_step),
            ("lambda_grounding", self.lambda_grounding),
            ("lambda_termination", self.lambda_termination),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RewardError::InvalidWeight(name));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    MultiStep,
    UngroundedObject,
    PrematureEnd,
    MissingEnd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedResponse {
    pub raw: String,
    pub actions: Vec<ActionCommand>,
    #[serde(rename = "N")]
    pub n: usize,
    pub r_s: f64,
    pub r_g: f64,
    pub r_t: f64,
    pub r_total: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Words never taken as object ids when they follow a verb in free text.
const STOPWORDS: &[&str] = &[
    "a", "all", "an", "and", "any", "at", "both", "each", "from", "in", "inside", "into", "it",
    "its", "of", "off", "on", "onto", "that", "the", "them", "then", "these", "this", "those",
    "to", "up", "with",
];

fn separator_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)[,;\n]|\.(?:\s|$)|\bthen\b").expect("valid separator regex")
    })
}

/// Extracts every action command in `response`, in order of appearance.
pub fn parse_actions(response: &str) -> (Vec<ActionCommand>, usize) {
    let mut found: Vec<(usize, ActionCommand)> = Vec::new();
    for caps in command_regex().captures_iter(response) {
        let target = &caps[2];
        let head = target.split('.').next().unwrap_or(target);
        if STOPWORDS.contains(&head.to_ascii_lowercase().as_str()) {
            continue;
        }
        if let Some(cmd) = build_command(&caps[1], target) {
            found.push((caps.get(0).map_or(0, |m| m.start()), cmd));
        }
    }
    for m in end_regex().find_iter(response) {
        found.push((m.start(), ActionCommand::end()));
    }
    // a bare `end` counts only as a whole segment
    let mut start = 0;
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    for sep in separator_regex().find_iter(response) {
        bounds.push((start, sep.start()));
        start = sep.end();
    }
    bounds.push((start, response.len()));
    for (a, b) in bounds {
        let seg = strip_segment(&response[a..b]);
        if seg.eq_ignore_ascii_case("end") {
            let offset = response[a..b].find(['e', 'E']).unwrap_or(0);
            found.push((a + offset, ActionCommand::end()));
        }
    }
    found.sort_by_key(|(pos, _)| *pos);
    let actions: Vec<ActionCommand> = found.into_iter().map(|(_, c)| c).collect();
    let n = actions.len();
    (actions, n)
}

fn goal_met(sg: &SceneGraph, goal: &GoalSpec) -> bool {
    satisfied(sg, goal).unwrap_or(false)
}

/// 1 for a lone `end` on a satisfied goal, −α for several actions, else 0.
pub fn reward_step(parsed: &[ActionCommand], sg: &SceneGraph, goal: &GoalSpec, w: &RewardWeights) -> f64 {
    if parsed.len() > 1 {
        return -w.alpha;
    }
    match parsed.first() {
        Some(a) if a.is_end() && goal_met(sg, goal) => 1.0,
        _ => 0.0,
    }
}

/// 1 when every named target is a node of `sg`.
pub fn reward_grounding(parsed: &[ActionCommand], sg: &SceneGraph) -> f64 {
    let grounded = parsed
        .iter()
        .filter_map(|a| a.target.as_ref())
        .all(|t| sg.contains_node(t.as_str()));
    if grounded {
        1.0
    } else {
        0.0
    }
}

/// Scores the termination decision carried by the first action.
pub fn reward_termination(parsed: &[ActionCommand], sg: &SceneGraph, goal: &GoalSpec, w: &RewardWeights) -> f64 {
    match parsed.first() {
        Some(a) if a.is_end() => {
            if goal_met(sg, goal) {
                1.0
            } else {
                -w.beta
            }
        }
        _ => 0.0,
    }
}

pub fn grade(response: &str, sg: &SceneGraph, goal: &GoalSpec, w: &RewardWeights) -> GradedResponse {
    let (actions, n) = parse_actions(response);
    let r_s = reward_step(&actions, sg, goal, w);
    let r_g = reward_grounding(&actions, sg);
    let r_t = reward_termination(&actions, sg, goal, w);
    let r_total = w.lambda_step * r_s + w.lambda_grounding * r_g + w.lambda_termination * r_t;

    let met = goal_met(sg, goal);
    let first_is_end = actions.first().is_some_and(|a| a.is_end());
    let mut diagnostics = Vec::new();
    if n > 1 {
        diagnostics.push(Diagnostic::MultiStep);
    }
    if r_g == 0.0 {
        diagnostics.push(Diagnostic::UngroundedObject);
    }
    if first_is_end && !met {
        diagnostics.push(Diagnostic::PrematureEnd);
    }
    if met && !first_is_end {
        diagnostics.push(Diagnostic::MissingEnd);
    }
    GradedResponse {
        raw: response.to_string(),
        actions,
        n,
        r_s,
        r_g,
        r_t,
        r_total,
        diagnostics,
    }
}

/// Grades one offline record `{response, scene_graph, goal, weights?}` and
/// returns it with the reward fields appended. `scene_graph` may be the
/// structured object or either text form.
pub fn grade_record(
    record: &serde_json::Value,
    defaults: &RewardWeights,
) -> Result<serde_json::Value, RewardError> {
    let obj = record
        .as_object()
        .ok_or_else(|| RewardError::Invalid("record is not an object".into()))?;
    let response = obj
        .get("response")
        .and_then(|v| v.as_str())
        .ok_or(RewardError::MissingField("response"))?;
    let sg_value = obj.get("scene_graph").ok_or(RewardError::MissingField("scene_graph"))?;
    let sg = match sg_value {
        serde_json::Value::String(text) => scene::parse_lenient(text).and_then(|raw| scene::normalize(&raw)),
        v => scene::from_value(v),
    }
    .map_err(|e| RewardError::Invalid(format!("scene_graph: {e}")))?;
    let goal: GoalSpec = serde_json::from_value(
        obj.get("goal").cloned().ok_or(RewardError::MissingField("goal"))?,
    )
    .map_err(|e| RewardError::Invalid(format!("goal: {e}")))?;
    let weights = match obj.get("weights") {
        Some(v) if !v.is_null() => serde_json::from_value::<RewardWeights>(v.clone())
            .map_err(|e| RewardError::Invalid(format!("weights: {e}")))?,
        _ => defaults.clone(),
    };
    weights.validate()?;
    let g = grade(response, &sg, &goal, &weights);
    let mut out = obj.clone();
    out.insert("r_s".into(), g.r_s.into());
    out.insert("r_g".into(), g.r_g.into());
    out.insert("r_t".into(), g.r_t.into());
    out.insert("r_total".into(), g.r_total.into());
    out.insert("N".into(), g.n.into());
    out.insert(
        "diagnostics".into(),
        serde_json::to_value(&g.diagnostics).expect("diagnostics serialize"),
    );
    Ok(serde_json::Value::Object(out))
}
