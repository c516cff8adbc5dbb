//! Command-line front end for the task-automaton reward-shaping library:
//! configuration loading, automaton file formats, experiment assembly, and
//! the five subcommands (`compile`, `run`, `evaluate`, `oracle`, `sweep`).

pub mod commands;
pub mod config;
pub mod dfa_io;
pub mod error;
pub mod experiment;
pub mod oracle_suite;

pub use error::CliError;

/// The bundled example-task automaton in the JSON interchange format.
pub const FIXTURE_AUTOMATON_JSON: &str = include_str!("../assets/fixture_automaton.json");
