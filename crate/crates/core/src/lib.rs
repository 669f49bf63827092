//! Causal analysis for performance modeling of configurable software systems.

pub mod citest;
pub mod dataset;
pub mod discovery;
pub mod estimation;
pub mod graph;
pub mod queries;
pub mod distribution;
pub mod synthlab;
