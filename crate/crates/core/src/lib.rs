//! Scene-graph world model, symbolic action engine, procedural task suites,
//! reward grading and training-data synthesis for embodied task planning.

pub mod agent;
pub mod assets;
pub mod bench;
pub mod data;
pub mod engine;
pub mod harness;
pub mod reward;
pub mod scene;
