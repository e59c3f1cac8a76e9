//! Configuration, pipelines and persistence behind the `wnrefl` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;
