//! Experiment tooling around `gnesplit-core`: instance files, configuration,
//! CSV output and the command implementations behind the `gnesplit` binary.

pub mod commands;
pub mod config;
pub mod document;
pub mod output;
