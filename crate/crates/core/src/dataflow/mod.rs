//! Processing elements, abstract workflow graphs, and their compilation
//! into concrete parallel plans.
//!
//! A workflow is a DAG of processing elements (PEs) connected port to port.
//! The abstract graph says nothing about parallelism; [`compile`] turns it
//! into a [`ConcretePlan`] with per-node instance counts and per-connection
//! routing rules for a chosen [`MappingId`].

mod descriptor;
mod graph;
mod plan;
mod routing;

pub use descriptor::{Direction, GroupingSpec, InputSpec, PEDescriptor, PEKind, PortSpec};
pub use graph::{Connection, WorkflowGraph};
pub use plan::{allocate_instances, compile, ConcretePlan, MappingId};
pub use routing::route;

use thiserror::Error;

/// Errors raised while building descriptors and graphs or compiling plans.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no port named `{port}`")]
    UnknownPort { node: String, port: String },
    #[error("port `{port}` on node `{node}` has the wrong direction for this connection")]
    WrongDirection { node: String, port: String },
    #[error("connection would introduce a cycle")]
    CycleDetected,
    #[error("node id `{0}` already present in graph")]
    DuplicateNode(String),
    #[error("descriptor name `{0}` already present in graph")]
    DuplicateName(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("graph has no root node")]
    NoRoot,
    #[error("group-by index {index} out of range for payload of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported mapping `{0}`")]
    UnsupportedMapping(String),
    #[error("too few processes: need at least {required}, got {given}")]
    TooFewProcesses { required: usize, given: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}
