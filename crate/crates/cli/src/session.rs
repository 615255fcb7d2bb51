//! Cached login session: server address, user, token.

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub addr: String,
    pub user: String,
    pub token: String,
}

/// Session file location: `$LAMINAR_SESSION` when set, otherwise
/// `$HOME/.laminar/session.json`.
pub fn session_path() -> Result<PathBuf> {
    if let Ok(path) = std::env::var("LAMINAR_SESSION") {
        return Ok(PathBuf::from(path));
    }
    let home = std::env::var("HOME").context("neither LAMINAR_SESSION nor HOME is set")?;
    Ok(PathBuf::from(home).join(".laminar").join("session.json"))
}

pub fn load() -> Result<Session> {
    let path = session_path()?;
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("not logged in (no session at {})", path.display()))?;
    serde_json::from_str(&text).context("session file is corrupt; log in again")
}

pub fn save(session: &Session) -> Result<()> {
    let path = session_path()?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, serde_json::to_string_pretty(session)?)?;
    Ok(())
}
