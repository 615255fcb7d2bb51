//! Requirement validation against the engine's declared capability set.
//!
//! No installation is attempted: a run is either satisfiable with what the
//! engine declares, or it is rejected up front with the missing roots.

use std::collections::BTreeSet;

/// Module roots the stock engine declares as available to behaviors.
pub fn default_capabilities() -> BTreeSet<String> {
    [
        "collections",
        "csv",
        "functools",
        "io",
        "itertools",
        "json",
        "math",
        "os",
        "random",
        "re",
        "statistics",
        "string",
        "sys",
        "time",
        "urllib",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Returns the import roots not covered by `capabilities`, sorted and
/// deduplicated. Empty means runnable.
pub fn check_requirements(imports: &[String], capabilities: &BTreeSet<String>) -> Vec<String> {
    let mut missing: Vec<String> = imports
        .iter()
        .filter(|import| !capabilities.contains(import.as_str()))
        .cloned()
        .collect();
    missing.sort();
    missing.dedup();
    missing
}
