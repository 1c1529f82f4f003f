//! Offline grading of logged responses.

use std::path::Path;

use super::{read_file, write_file, HarnessError};
use crate::reward::{grade_record, RewardWeights};

#[derive(Clone, Debug, Default)]
pub struct GradeOutcome {
    pub graded: usize,
    /// `(line, message)` for every record that could not be graded.
    pub errors: Vec<(usize, String)>,
}

/// Appends reward fields to every record of a newline-delimited file.
/// Bad records are reported by line and left out of the output.
pub fn grade_file(input: &Path, output: &Path, weights: &RewardWeights) -> Result<GradeOutcome, HarnessError> {
    weights
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let text = read_file(input)?;
    let mut out = String::new();
    let mut outcome = GradeOutcome::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let graded = serde_json::from_str::<serde_json::Value>(line)
            .map_err(|e| e.to_string())
            .and_then(|v| grade_record(&v, weights).map_err(|e| e.to_string()));
        match graded {
            Ok(v) => {
                out.push_str(&serde_json::to_string(&v)?);
                out.push('\n');
                outcome.graded += 1;
            }
            Err(message) => outcome.errors.push((i + 1, message)),
        }
    }
    write_file(output, out)?;
    Ok(outcome)
}
