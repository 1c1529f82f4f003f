//! Aggregate tables over episode files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::{create_dir, pretty, read_file, write_file, HarnessError};
use crate::bench::{summarize, summary_markdown, CellSummary, EpisodeRecord};

fn noise_levels(cells: &[CellSummary]) -> Vec<u64> {
    let set: BTreeSet<u64> = cells.iter().map(|c| c.noise_ratio.to_bits()).collect();
    let mut v: Vec<u64> = set.into_iter().collect();
    v.sort_by(|a, b| f64::from_bits(*a).total_cmp(&f64::from_bits(*b)));
    v
}

fn rows(cells: &[CellSummary]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for c in cells {
        let k = (c.suite.clone(), c.level.clone());
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn lookup<'a>(cells: &'a [CellSummary], row: &(String, String), bits: u64) -> Option<&'a CellSummary> {
    cells
        .iter()
        .find(|c| c.suite == row.0 && c.level == row.1 && c.noise_ratio.to_bits() == bits)
}

/// Mean TP (%) with one column per noise ratio.
pub fn noise_table_markdown(cells: &[CellSummary]) -> String {
    let levels = noise_levels(cells);
    let mut out = String::from("| suite | level |");
    for b in &levels {
        out.push_str(&format!(" TP @ {:.0}% noise |", 100.0 * f64::from_bits(*b)));
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(levels.len()));
    out.push('\n');
    for row in rows(cells) {
        out.push_str(&format!("| {} | {} |", row.0, row.1));
        for b in &levels {
            match lookup(cells, &row, *b) {
                Some(c) => out.push_str(&format!(" {:.1} |", 100.0 * c.mean_tp)),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Plot-ready matrix: one row per cell, one mean-TP column per noise ratio.
pub fn noise_matrix_csv(cells: &[CellSummary]) -> String {
    let levels = noise_levels(cells);
    let mut out = String::from("cell");
    for b in &levels {
        out.push_str(&format!(",{}", f64::from_bits(*b)));
    }
    out.push('\n');
    for row in rows(cells) {
        out.push_str(&format!("{}-{}", row.0, row.1));
        for b in &levels {
            match lookup(cells, &row, *b) {
                Some(c) => out.push_str(&format!(",{:.6}", c.mean_tp)),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub episodes: usize,
    pub cells: Vec<CellSummary>,
}

/// Reads episode files and writes `report.md`, `report.json` and
/// `tp_matrix.csv` under `out`.
pub fn run_report(inputs: &[PathBuf], out: &Path) -> Result<ReportOutcome, HarnessError> {
    let mut records: Vec<EpisodeRecord> = Vec::new();
    for path in inputs {
        let text = read_file(path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(line).map_err(|e| HarnessError::Line {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
    }
    let cells = summarize(&records);
    create_dir(out)?;
    let md = format!(
        "{}\n{}",
        summary_markdown(&cells),
        noise_table_markdown(&cells)
    );
    write_file(&out.join("report.md"), md)?;
    write_file(&out.join("report.json"), pretty(&cells)?)?;
    write_file(&out.join("tp_matrix.csv"), noise_matrix_csv(&cells))?;
    Ok(ReportOutcome {
        episodes: records.len(),
        cells,
    })
}
