//! Command-line harness for the gapvi solvers and diagnostics.

pub mod commands;
pub mod config;
pub mod trace;
