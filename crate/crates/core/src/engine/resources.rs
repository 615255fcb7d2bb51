//! Materialization of client-shipped resource bundles.

use super::EngineError;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use std::path::{Component, Path, PathBuf};

/// One file in a resource bundle: a relative path and base64 content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub path: String,
    pub content: String,
}

/// Wire format: array of `{"path", "content"}` entries.
pub type ResourceBundle = Vec<ResourceEntry>;

/// Decodes each entry and writes it under `workdir/resources/<path>`,
/// creating directories as needed. Paths must be relative and must not
/// contain `..` segments.
pub fn materialize_resources(
    bundle: &ResourceBundle,
    workdir: &Path,
) -> Result<Vec<PathBuf>, EngineError> {
    let root = workdir.join("resources");
    let mut written = Vec::with_capacity(bundle.len());
    for entry in bundle {
        let relative = Path::new(&entry.path);
        if relative.components().any(|c| {
            matches!(c, Component::ParentDir | Component::RootDir | Component::Prefix(_))
        }) {
            return Err(EngineError::PathEscape(entry.path.clone()));
        }
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(entry.content.as_bytes())
            .map_err(|_| EngineError::DecodeError(entry.path.clone()))?;
        let target = root.join(relative);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(|e| EngineError::Io(e.to_string()))?;
        }
        std::fs::write(&target, bytes).map_err(|e| EngineError::Io(e.to_string()))?;
        written.push(target);
    }
    Ok(written)
}
