//! Compilation of abstract graphs into concrete parallel plans.

use super::{GraphError, GroupingSpec, WorkflowGraph};
use indexmap::IndexMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Enactment backend selector.
///
/// `MPI` is recognized on the wire but always rejected; `REDIS` is reserved:
/// plans can carry it, the engine refuses to run it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingId {
    Simple,
    Multi,
    Redis,
}

impl MappingId {
    /// Parses a wire name. Accepts exactly `SIMPLE`, `MULTI`, `MPI`, `REDIS`.
    pub fn parse(name: &str) -> Result<Self, GraphError> {
        match name {
            "SIMPLE" => Ok(MappingId::Simple),
            "MULTI" => Ok(MappingId::Multi),
            "REDIS" => Ok(MappingId::Redis),
            "MPI" => Err(GraphError::UnsupportedMapping("MPI".into())),
            other => Err(GraphError::UnsupportedMapping(other.into())),
        }
    }

    pub fn wire_name(&self) -> &'static str {
        match self {
            MappingId::Simple => "SIMPLE",
            MappingId::Multi => "MULTI",
            MappingId::Redis => "REDIS",
        }
    }
}

impl std::fmt::Display for MappingId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.wire_name())
    }
}

impl Serialize for MappingId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.wire_name())
    }
}

impl<'de> Deserialize<'de> for MappingId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        MappingId::parse(&name).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// The compiled parallel plan: instance counts per node and a routing rule
/// per connection. This is what the engine executes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcretePlan {
    graph: WorkflowGraph,
    mapping: MappingId,
    total_processes: usize,
    instance_counts: IndexMap<String, usize>,
    routing: Vec<GroupingSpec>,
}

impl ConcretePlan {
    pub fn graph(&self) -> &WorkflowGraph {
        &self.graph
    }

    pub fn mapping(&self) -> MappingId {
        self.mapping
    }

    pub fn total_processes(&self) -> usize {
        self.total_processes
    }

    pub fn instance_counts(&self) -> &IndexMap<String, usize> {
        &self.instance_counts
    }

    pub fn instances(&self, node: &str) -> usize {
        self.instance_counts.get(node).copied().unwrap_or(0)
    }

    /// Routing rule for connection `index` (parallel to `graph.connections()`).
    pub fn routing(&self, index: usize) -> &GroupingSpec {
        &self.routing[index]
    }
}

/// Splits `total_processes` over the graph's nodes: every root gets exactly
/// one instance, the remainder is divided as evenly as possible among
/// non-root nodes in topological order, earlier nodes taking the extra.
pub fn allocate_instances(
    graph: &WorkflowGraph,
    total_processes: usize,
) -> Result<IndexMap<String, usize>, GraphError> {
    let node_count = graph.node_count();
    if total_processes < node_count {
        return Err(GraphError::TooFewProcesses { required: node_count, given: total_processes });
    }
    let roots = graph.find_roots()?;
    let order = graph.topo_order()?;
    let non_roots: Vec<&String> = order.iter().filter(|id| !roots.contains(id)).collect();

    let mut counts: IndexMap<String, usize> =
        graph.node_ids().map(|id| (id.to_string(), 1)).collect();
    if !non_roots.is_empty() {
        let remaining = total_processes - roots.len();
        let base = remaining / non_roots.len();
        let extra = remaining % non_roots.len();
        for (i, id) in non_roots.iter().enumerate() {
            let share = base + usize::from(i < extra);
            counts[id.as_str()] = share.max(1);
        }
    }
    Ok(counts)
}

/// Compiles `graph` for `mapping` with `total_processes` processes.
///
/// `SIMPLE` always yields one instance per node; parallel mappings allocate
/// via [`allocate_instances`]. Every connection routes by the destination
/// input port's grouping.
pub fn compile(
    graph: &WorkflowGraph,
    mapping: MappingId,
    total_processes: usize,
) -> Result<ConcretePlan, GraphError> {
    graph.validate().map_err(|e| match e {
        GraphError::InvalidGraph(msg) => GraphError::InvalidGraph(msg),
        other => GraphError::InvalidGraph(other.to_string()),
    })?;

    let instance_counts = match mapping {
        MappingId::Simple => {
            if total_processes == 0 {
                return Err(GraphError::TooFewProcesses { required: 1, given: 0 });
            }
            graph.node_ids().map(|id| (id.to_string(), 1)).collect()
        }
        MappingId::Multi | MappingId::Redis => allocate_instances(graph, total_processes)?,
    };

    let mut routing = Vec::with_capacity(graph.connections().len());
    for connection in graph.connections() {
        let descriptor = graph
            .node(&connection.dst)
            .ok_or_else(|| GraphError::UnknownNode(connection.dst.clone()))?;
        let input = descriptor
            .input(&connection.dst_port)
            .ok_or_else(|| GraphError::UnknownPort {
                node: connection.dst.clone(),
                port: connection.dst_port.clone(),
            })?;
        routing.push(input.grouping.clone());
    }

    Ok(ConcretePlan {
        graph: graph.clone(),
        mapping,
        total_processes,
        instance_counts,
        routing,
    })
}
