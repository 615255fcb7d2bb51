//! Stream-based dataflow workflows behind a serverless-style registry and
//! execution service.
//!
//! The crate is organized around five subsystems:
//!
//! - [`dataflow`]: processing elements, workflow graphs, and compilation of
//!   abstract graphs into concrete parallel plans.
//! - [`engine`]: plan execution under the sequential and multi-worker
//!   mappings, with output and stdout capture.
//! - [`registry`]: persistent store of users, PEs, and workflows with
//!   ownership and composition links.
//! - [`search`]: text, semantic, and code-completion search over registered
//!   components, backed by a pluggable embedding provider.
//! - [`server`]: the HTTP facade exposing all of the above.

pub mod dataflow;
pub mod engine;
pub mod hash;
pub mod registry;
pub mod search;
pub mod server;

pub use dataflow::{
    compile, ConcretePlan, GraphError, GroupingSpec, MappingId, PEDescriptor, PEKind,
    WorkflowGraph,
};
pub use engine::{Engine, RunOptions, RunResult, RunStatus};
pub use hash::{content_digest, stable_hash};

/// Dynamic payload value flowing between PE instances.
pub type Value = serde_json::Value;
