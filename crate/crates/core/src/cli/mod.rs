//! Command-line front end: scenario files, traces, summaries and the
//! `run`, `sweep` and `paperpack` commands.

pub mod commands;
pub mod config;
pub mod scenarios;
pub mod summary;
pub mod trace_io;
