//! Task progress and per-cell aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeRecord, Termination};
use crate::engine::GoalSpec;
use crate::scene::SceneGraph;

/// Satisfied atomic goal facts over all atomic goal facts. Quantified
/// clauses expand against `sg`; object attributes never change during an
/// episode, so this equals expansion against the initial scene.
pub fn task_progress(sg: &SceneGraph, goal: &GoalSpec) -> f64 {
    let Ok(atoms) = goal.atoms(sg) else {
        return 0.0;
    };
    if atoms.is_empty() {
        return 1.0;
    }
    let hit = atoms.iter().filter(|f| sg.holds(f)).count();
    hit as f64 / atoms.len() as f64
}

/// Aggregate over one (suite, level, noise) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub suite: String,
    pub level: String,
    pub noise_ratio: f64,
    pub episodes: usize,
    pub mean_tp: f64,
    pub success_rate: f64,
    pub mean_steps: f64,
    pub agent_errors: usize,
}

/// Groups records by (suite, level, noise) in a fixed order. The result does
/// not depend on record order.
pub fn summarize(records: &[EpisodeRecord]) -> Vec<CellSummary> {
    // noise keyed by its bit pattern so the map stays totally ordered
    let mut cells: BTreeMap<(String, String, u64), Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.suite.to_string(), r.level.to_string(), r.noise_ratio.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<CellSummary> = cells
        .into_iter()
        .map(|((suite, level, bits), rs)| {
            let n = rs.len() as f64;
            // sum in a canonical order for bitwise-stable means
            let mut tps: Vec<f64> = rs.iter().map(|r| r.task_progress).collect();
            tps.sort_by(f64::total_cmp);
            let mut steps: Vec<usize> = rs.iter().map(|r| r.steps_used).collect();
            steps.sort_unstable();
            CellSummary {
                suite,
                level,
                noise_ratio: f64::from_bits(bits),
                episodes: rs.len(),
                mean_tp: tps.iter().sum::<f64>() / n,
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / n,
                mean_steps: steps.iter().sum::<usize>() as f64 / n,
                agent_errors: rs
                    .iter()
                    .filter(|r| r.termination == Termination::AgentError)
                    .count(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (suite_rank(&a.suite), level_rank(&a.level), a.noise_ratio.to_bits())
            .cmp(&(suite_rank(&b.suite), level_rank(&b.level), b.noise_ratio.to_bits()))
    });
    out
}

fn suite_rank(s: &str) -> usize {
    ["sod", "sas", "gcg"].iter().position(|x| *x == s).unwrap_or(usize::MAX)
}

fn level_rank(s: &str) -> usize {
    ["easy", "general", "complex"].iter().position(|x| *x == s).unwrap_or(usize::MAX)
}

/// Markdown table: one row per cell, TP and success as percentages.
pub fn summary_markdown(cells: &[CellSummary]) -> String {
    let mut out = String::from(
        "| suite | level | noise | episodes | mean TP (%) | success (%) | mean steps |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for c in cells {
        out.push_str(&format!(
            "| {} | {} | {:.2} | {} | {:.1} | {:.1} | {:.1} |\n",
            c.suite,
            c.level,
            c.noise_ratio,
            c.episodes,
            100.0 * c.mean_tp,
            100.0 * c.success_rate,
            c.mean_steps
        ));
    }
    out
}
