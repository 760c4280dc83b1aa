//! CLI error type.

use std::path::Path;

use thiserror::Error;

/// Location of the shipped configuration schema, relative to the repository root.
pub const SCHEMA_PATH: &str = "crates/cli/schema/config.schema.json";

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration does not match the schema or fails a value check.
    #[error("ConfigInvalid at `{path}`: {message} (schema {schema})")]
    ConfigInvalid { path: String, schema: String, message: String },
    #[error(transparent)]
    Core(#[from] nonscatter::error::Error),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Exit code for errors raised before a run starts.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => 2,
            _ => 3,
        }
    }
}
