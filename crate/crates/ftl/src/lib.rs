// SPDX-License-Identifier: Apache-2.0
//! Reproducible file-based flows over [`ftl_core`]: run configuration,
//! text formats, atomic output and the computations behind the `ftl`
//! command-line tool.

pub mod config;
pub mod error;
pub mod flows;
pub mod formats;
pub mod io;

pub use config::{Handicap, RunConfig};
pub use error::{FlowError, Result};
