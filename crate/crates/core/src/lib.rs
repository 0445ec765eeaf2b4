//! Multi-source knowledge graph matching by reduction to binary (1:1) matching tasks.

pub mod rdf;
pub mod alignment;
pub mod text;
pub mod planner;
pub mod matcher;
pub mod merge;
pub mod orchestrator;
pub mod evaluation;
pub mod repair;
pub mod testbed;
pub mod cli;
