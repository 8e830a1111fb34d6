//! Scenario runner for the half-linear delay equation workbench.
//!
//! Scenarios are JSON documents ([`config`]); [`checks`] runs the solve,
//! classify, hypothesis and verification pipelines; [`report`] renders the
//! results deterministically; [`cli`] is the command-line front end.

pub mod checks;
pub mod cli;
pub mod config;
pub mod report;

pub use checks::{route, run, Overrides};
pub use config::{bundled, bundled_by_name, Scenario};
pub use report::{Metric, RunReport};
