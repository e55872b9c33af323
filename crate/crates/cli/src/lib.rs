//! Configuration-driven runs of the `drbsde` solvers: `solve`, `converge`,
//! `compare` and `price`. Every command is deterministic given the config and
//! seed; output bytes do not depend on the worker-thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
mod run;

use std::fmt;

pub use config::RunConfig;
pub use run::{run, Command};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(drbsde::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m.clone()),
            CliError::Numeric(e) => (e.kind(), e.to_string()),
            CliError::Io(m) => ("io", m.clone()),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": self.exit_code() } })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<drbsde::Error> for CliError {
    fn from(e: drbsde::Error) -> Self {
        CliError::Numeric(e)
    }
}
