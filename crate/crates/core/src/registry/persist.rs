//! Single-document store persistence with atomic writes.

use super::{Links, PERecord, RegistryError, UserRecord, WorkflowRecord};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// The on-disk document: arrays of users, PEs, workflows, and the
/// association tables. Embeddings serialize as arrays of decimal floats
/// which round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDoc {
    pub users: Vec<UserRecord>,
    pub pes: Vec<PERecord>,
    pub workflows: Vec<WorkflowRecord>,
    pub links: Links,
}

/// Writes the document atomically: temp file in the target directory, then
/// rename over the destination.
pub fn save(path: &Path, doc: &StoreDoc) -> Result<(), RegistryError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = parent.unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| RegistryError::Io(e.to_string()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(|e| RegistryError::Io(e.to_string()))?;
    let bytes =
        serde_json::to_vec_pretty(doc).map_err(|e| RegistryError::Io(e.to_string()))?;
    tmp.write_all(&bytes).map_err(|e| RegistryError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| RegistryError::Io(e.to_string()))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<StoreDoc, RegistryError> {
    let bytes = std::fs::read(path).map_err(|e| RegistryError::Io(e.to_string()))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| RegistryError::Io(format!("store file is invalid: {e}")))
}
