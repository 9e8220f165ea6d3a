//! Configuration-driven experiment harness behind the `spectra` binary:
//! JSON run configs, per-seed CSV traces, `summary.json` reports and the
//! theory-verification commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod runner;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
