//! Procedural benchmark suites, observation noise, and the evaluation loop.

mod episode;
mod metrics;
mod noise;
mod task;

pub use episode::{
    episode_seed, run_episode, ActionLog, EpisodeConfig, EpisodeRecord, EpisodeResult, Termination,
};
pub use metrics::{summarize, summary_markdown, task_progress, CellSummary};
pub use noise::{perturb, perturb_with, perturbed_count, FlipMode};
pub use task::{
    all_tasks, derive_seed, generate_task, Level, ParseEnumError, Suite, TaskSpec, BOX_COLORS,
    GCG_COMPLEX_INSTRUCTION, GCG_EASY_INSTRUCTION, GCG_GENERAL_INSTRUCTION, SAS_COMPLEX_INSTRUCTION,
    SAS_EASY_INSTRUCTION, SAS_GENERAL_INSTRUCTION, SOD_INSTRUCTION,
};
