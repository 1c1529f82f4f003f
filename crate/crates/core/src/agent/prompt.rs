//! Deterministic prompt template for text-in, text-out agents.

use std::fmt::Write;

use super::PolicyQuery;
use crate::scene::{self, Format};

const CONTRACT: &str = "Respond with exactly one atomic action, such as `pick cube_01`, \
`place on table_01`, `place inside box_01`, `open drawer_01`, `close drawer_01`, \
`turn on lamp_01`, `turn off lamp_01`, `push drawer_01`, or `end` once the instruction is fulfilled.";

/// Renders instruction, scene, history and the output contract. The scene is
/// shown in prompt-text form; an unparseable observation is passed through.
pub fn format_prompt(query: &PolicyQuery) -> String {
    let scene_text = scene::parse(&query.observation)
        .map(|sg| scene::serialize(&sg, Format::PromptText))
        .unwrap_or_else(|_| query.observation.clone());
    let mut out = String::new();
    let _ = writeln!(out, "## Instruction\n{}\n", query.instruction.trim());
    let _ = writeln!(out, "## Scene graph\n{}", scene_text.trim_end());
    let _ = writeln!(out, "\n## History (step {} of {})", query.step, query.budget);
    for (i, h) in query.history.iter().enumerate() {
        if query.feedback {
            let outcome = if h.success { "success" } else { "failure" };
            let _ = writeln!(out, "{}. {} -> {}", i + 1, h.command, outcome);
        } else {
            let _ = writeln!(out, "{}. {}", i + 1, h.command);
        }
    }
    let _ = write!(out, "\n## Output\n{CONTRACT}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::HistoryEntry;

    fn query(history: Vec<HistoryEntry>) -> PolicyQuery {
        PolicyQuery {
            observation: r#"{"nodes":[{"id":"cube_01"}],"edges":[]}"#.into(),
            instruction: "Put the cube away.".into(),
            step: history.len(),
            history,
            budget: 13,
            feedback: true,
        }
    }

    fn history_lines(p: &str) -> Vec<&str> {
        let start = p.find("## History").unwrap();
        let end = p.find("## Output").unwrap();
        p[start..end].lines().skip(1).filter(|l| !l.is_empty()).collect()
    }

    #[test]
    fn empty_history_section_is_blank() {
        let p = format_prompt(&query(vec![]));
        assert!(p.contains("## History"));
        assert!(history_lines(&p).is_empty());
        assert!(p.contains("cube_01"));
    }

    #[test]
    fn stable_and_ordered() {
        let h: Vec<HistoryEntry> = ["open box_01", "pick cube_01", "place inside box_01"]
            .iter()
            .map(|c| HistoryEntry {
                command: c.to_string(),
                success: true,
            })
            .collect();
        let q = query(h);
        assert_eq!(format_prompt(&q), format_prompt(&q));
        let p = format_prompt(&q);
        let lines = history_lines(&p);
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("open box_01"));
        assert!(lines[2].contains("place inside box_01"));
    }
}
