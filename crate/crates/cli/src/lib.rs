//! Experiment driver: layered configuration, one runner per experiment and
//! hashed result records.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod record;
