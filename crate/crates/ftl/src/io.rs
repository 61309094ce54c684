// SPDX-License-Identifier: Apache-2.0
use std::io::Write;
use std::path::Path;

use crate::error::{FlowError, Result};

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| FlowError::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| FlowError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| FlowError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| FlowError::io(path, e.error))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FlowError::io(path, e))
}

/// Comment line that tags an output file with its command and config hash.
pub fn header(command: &str, config_hash: &str) -> String {
    format!("# ftl {command} config={config_hash}\n")
}

/// Config hash recorded in a file's header, if any.
pub fn header_hash(text: &str) -> Option<&str> {
    text.lines()
        .next()?
        .strip_prefix("# ftl ")?
        .split_once(" config=")
        .map(|(_, h)| h.trim())
}
