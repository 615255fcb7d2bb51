//! Plan execution under the SIMPLE and MULTI mappings.
//!
//! Both paths share the same contract: root instances are driven for a
//! fixed number of iterations, every emission is routed per the plan, and
//! termination is accounted with end-of-stream markers per upstream
//! (connection, sender-instance) pair, so no data can be lost under fan-in.

mod behavior;
mod builtin;
mod parallel;
mod requirements;
mod resources;
mod simple;

pub use behavior::{Behavior, BehaviorCatalog, Context, FnBehavior, InstanceInfo};
pub use builtin::{
    builtin_catalog, builtin_descriptor, builtin_descriptors, extinction_graph, extinction_value,
    isprime_graph, passes_prime_filter, synthetic_survey_row,
};
pub use requirements::{check_requirements, default_capabilities};
pub use resources::{materialize_resources, ResourceBundle, ResourceEntry};

use crate::dataflow::{ConcretePlan, GraphError, MappingId};
use crate::hash::stable_hash;
use crate::Value;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Errors that prevent a run from starting or abort it outright. Behavior
/// panics do not surface here: they complete the run as
/// [`RunStatus::Failed`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("no behavior registered for PE `{0}`")]
    UnresolvedPE(String),
    #[error("mapping `{0}` is not executable")]
    UnsupportedMapping(String),
    #[error("resource path `{0}` escapes the resources directory")]
    PathEscape(String),
    #[error("invalid base64 in resource `{0}`")]
    DecodeError(String),
    #[error("missing requirements: {0:?}")]
    MissingRequirements(Vec<String>),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Outcome marker for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Captured outputs of one run.
///
/// `outputs` holds, per node, the values that left the workflow: emissions
/// on output ports with no downstream connection plus values captured by
/// consumer behaviors. `stdout` holds the engine-captured print lines;
/// per-instance order is preserved, interleaving across instances is not
/// specified under MULTI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub stdout: Vec<String>,
    pub outputs: BTreeMap<String, Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunResult {
    fn completed(stdout: Vec<String>, outputs: BTreeMap<String, Vec<Value>>) -> Self {
        RunResult { status: RunStatus::Completed, stdout, outputs, error: None }
    }

    fn failed(
        stdout: Vec<String>,
        outputs: BTreeMap<String, Vec<Value>>,
        error: impl Into<String>,
    ) -> Self {
        RunResult { status: RunStatus::Failed, stdout, outputs, error: Some(error.into()) }
    }
}

/// Per-run knobs beyond the plan itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Base seed mixed into every instance's seed.
    pub seed: u64,
    /// Bounded channel capacity between worker instances.
    pub channel_capacity: usize,
    /// Extra behavior arguments forwarded to instance construction.
    pub args: serde_json::Map<String, Value>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, channel_capacity: 1024, args: serde_json::Map::new() }
    }
}

impl RunOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Deterministic per-instance seed: a pure function of the base seed, the
/// node id, and the instance index, so sequential and parallel runs of the
/// same plan see identical randomness.
pub fn instance_seed(base: u64, node: &str, instance: usize) -> u64 {
    base ^ stable_hash(node.as_bytes()) ^ (instance as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// The execution engine: a behavior catalog plus the declared capability
/// set used to validate PE requirements before a run starts.
#[derive(Clone)]
pub struct Engine {
    catalog: Arc<BehaviorCatalog>,
    capabilities: std::collections::BTreeSet<String>,
}

impl Engine {
    pub fn new(catalog: Arc<BehaviorCatalog>) -> Self {
        Engine { catalog, capabilities: default_capabilities() }
    }

    pub fn with_capabilities(
        mut self,
        capabilities: impl IntoIterator<Item = String>,
    ) -> Self {
        self.capabilities = capabilities.into_iter().collect();
        self
    }

    pub fn catalog(&self) -> &Arc<BehaviorCatalog> {
        &self.catalog
    }

    /// Import roots the engine cannot satisfy (empty means runnable).
    pub fn missing_requirements(&self, imports: &[String]) -> Vec<String> {
        check_requirements(imports, &self.capabilities)
    }

    /// Runs `plan` for `iterations` producer iterations.
    ///
    /// Resources, when given, are materialized into a run-private directory
    /// that behaviors reach through [`Context::resource_path`]. The
    /// directory is removed when the run finishes.
    pub fn execute(
        &self,
        plan: &ConcretePlan,
        iterations: u64,
        resources: Option<&ResourceBundle>,
        options: &RunOptions,
    ) -> Result<RunResult, EngineError> {
        for (_, descriptor) in plan.graph().nodes() {
            if !self.catalog.contains(descriptor.name()) {
                return Err(EngineError::UnresolvedPE(descriptor.name().into()));
            }
        }
        let missing = self.missing_requirements(&plan.graph().all_imports());
        if !missing.is_empty() {
            return Err(EngineError::MissingRequirements(missing));
        }

        let workdir = match resources {
            Some(bundle) if !bundle.is_empty() => {
                let dir = tempfile::tempdir().map_err(|e| EngineError::Io(e.to_string()))?;
                materialize_resources(bundle, dir.path())?;
                Some(dir)
            }
            _ => None,
        };
        let resource_root = workdir.as_ref().map(|d| d.path().join("resources"));

        match plan.mapping() {
            MappingId::Simple => {
                simple::run_simple(plan, &self.catalog, iterations, resource_root, options)
            }
            MappingId::Multi => {
                parallel::run_parallel(plan, &self.catalog, iterations, resource_root, options)
            }
            MappingId::Redis => Err(EngineError::UnsupportedMapping(
                "REDIS mapping is reserved and not executable here".into(),
            )),
        }
    }
}

/// Round-robin share of `iterations` for instance `index` of `n` root
/// instances.
fn iterations_for_instance(iterations: u64, index: usize, n: usize) -> u64 {
    let n = n as u64;
    let index = index as u64;
    iterations / n + u64::from(index < iterations % n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_split_covers_all() {
        for iterations in 0..20u64 {
            for n in 1..5usize {
                let total: u64 =
                    (0..n).map(|i| iterations_for_instance(iterations, i, n)).sum();
                assert_eq!(total, iterations);
            }
        }
    }

    #[test]
    fn instance_seed_is_stable_and_distinct() {
        let a = instance_seed(42, "NumberProducer", 0);
        assert_eq!(a, instance_seed(42, "NumberProducer", 0));
        assert_ne!(a, instance_seed(42, "NumberProducer", 1));
        assert_ne!(a, instance_seed(42, "Other", 0));
        assert_ne!(a, instance_seed(43, "NumberProducer", 0));
    }
}
