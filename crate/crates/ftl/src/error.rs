// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FlowError> = std::result::Result<T, E>;

/// Errors of the file-based flows, grouped by the exit status they map to.
#[derive(Debug, Error)]
pub enum FlowError {
    /// Bad arguments or configuration.
    #[error("{0}")]
    Usage(String),
    /// The run finished but its result failed a check.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] ftl_core::Error),
}

impl FlowError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Verification(_) => 2,
            _ => 1,
        }
    }
}
