//! Experiment harness for the mdlgpsr engine: plan files, replicate
//! orchestration, artifact CSVs, and summary/comparison tables.

pub mod artifacts;
pub mod harness;
pub mod plan;
pub mod report;
pub mod score;
