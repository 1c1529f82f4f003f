//! The atomic action vocabulary, symbolic preconditions and effects, staged
//! execution with verification, and goal satisfaction.

mod action;
mod exec;
mod goal;

pub use action::{ActionCommand, CommandError, Verb};
pub(crate) use action::{build_command, command_regex, end_regex, strip_segment};
pub use exec::{
    execute, execute_with, is_container, is_drawer, is_movable, open_drawers_above,
    preconditions, preconditions_with, resolve_target, transition, transition_with,
    EngineConfig, EngineError, ExecutionResult, Feasibility, StageRecord, Verdict, GRIPPER_HOME,
    STAGES,
};
pub use goal::{satisfied, ClauseTarget, GoalSpec, ObjectFilter, QuantifiedClause};

#[cfg(test)]
mod tests;
