//! Cleaning of raw scene-graph text and template descriptions of graphs.

use std::fmt::Write;

use crate::scene::{normalize, parse_lenient, Fact, Predicate, SceneGraph, SceneError};

/// Parses either text form, tolerating alias predicates, duplicated
/// bidirectional edges and edges naming unlisted nodes, and canonicalizes.
pub fn clean(text: &str) -> Result<SceneGraph, SceneError> {
    normalize(&parse_lenient(text)?)
}

/// One sentence per fact, in canonical order. Used as the text side of
/// grounding pairs.
pub fn describe(sg: &SceneGraph) -> String {
    let mut out = String::new();
    for n in sg.nodes().values() {
        let _ = write!(out, "There is {} ({}). ", article(&n.category.replace('_', " ")), n.id);
    }
    for f in sg.facts() {
        let _ = match &f {
            Fact::Relation(e) => match e.predicate {
                Predicate::OnTop => write!(out, "{} is on top of {}. ", e.subject, e.object),
                Predicate::Inside => write!(out, "{} is inside {}. ", e.subject, e.object),
                Predicate::Beside => write!(out, "{} is beside {}. ", e.subject, e.object),
                Predicate::Holding => write!(out, "The robot is holding {}. ", e.object),
            },
            Fact::State { node, state } => write!(out, "{node} is {state}. "),
        };
    }
    out.trim_end().to_string()
}

fn article(noun: &str) -> String {
    let vowel = noun.starts_with(|c: char| "aeiou".contains(c));
    format!("{} {noun}", if vowel { "an" } else { "a" })
}
