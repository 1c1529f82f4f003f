//! File-level drivers behind the command-line tool: benchmark runs, dataset
//! generation, offline grading, trajectory replay and report emission.

mod datagen;
mod grade;
mod replay;
mod report;
mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agent::AgentError;
use crate::data::DataError;

pub use datagen::{run_datagen, DatagenConfig, DatagenOutcome};
pub use grade::{grade_file, GradeOutcome};
pub use replay::{replay_trajectory, ReplayStep};
pub use report::{noise_matrix_csv, noise_table_markdown, run_report, ReportOutcome};
pub use run::{bench_units, run_bench, BenchConfig, BenchOutcome, Thresholds};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("agent failed after {completed} episode(s): {source}")]
    Agent {
        completed: usize,
        #[source]
        source: AgentError,
    },
    #[error("trajectory `{trajectory}` diverges at step {step}: {reason}")]
    Divergence {
        trajectory: String,
        step: usize,
        reason: String,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

pub(crate) fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Pretty JSON with a trailing newline.
pub(crate) fn pretty(v: &impl serde::Serialize) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}
