//! Abstract workflow graphs: nodes, connections, validation.

use super::{Direction, GraphError, PEDescriptor};
use indexmap::IndexMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A directed edge between an output port and an input port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub src: String,
    pub src_port: String,
    pub dst: String,
    pub dst_port: String,
}

/// The abstract (user-described) workflow: a DAG of PE descriptors.
///
/// Node iteration order is insertion order everywhere, which keeps root
/// detection, allocation, and plans reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowGraph {
    name: String,
    description: Option<String>,
    nodes: IndexMap<String, PEDescriptor>,
    connections: Vec<Connection>,
}

impl WorkflowGraph {
    pub fn new(name: impl Into<String>) -> Self {
        WorkflowGraph {
            name: name.into(),
            description: None,
            nodes: IndexMap::new(),
            connections: Vec::new(),
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    /// Adds a node under `id`. Node ids and descriptor names must both be
    /// unique within one graph.
    pub fn add_node(
        &mut self,
        id: impl Into<String>,
        descriptor: PEDescriptor,
    ) -> Result<(), GraphError> {
        let id = id.into();
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        if self.nodes.values().any(|d| d.name() == descriptor.name()) {
            return Err(GraphError::DuplicateName(descriptor.name().into()));
        }
        self.nodes.insert(id, descriptor);
        Ok(())
    }

    /// Connects `src`'s output port to `dst`'s input port. Rejects unknown
    /// nodes or ports, direction mismatches, and edges that would introduce
    /// a cycle.
    pub fn connect(
        &mut self,
        src: &str,
        src_port: &str,
        dst: &str,
        dst_port: &str,
    ) -> Result<(), GraphError> {
        let src_desc = self
            .nodes
            .get(src)
            .ok_or_else(|| GraphError::UnknownNode(src.into()))?;
        let dst_desc = self
            .nodes
            .get(dst)
            .ok_or_else(|| GraphError::UnknownNode(dst.into()))?;

        check_port(src_desc, src, src_port, Direction::Out)?;
        check_port(dst_desc, dst, dst_port, Direction::In)?;

        self.connections.push(Connection {
            src: src.into(),
            src_port: src_port.into(),
            dst: dst.into(),
            dst_port: dst_port.into(),
        });
        if self.topo_order().is_err() {
            self.connections.pop();
            return Err(GraphError::CycleDetected);
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, &PEDescriptor)> {
        self.nodes.iter().map(|(id, d)| (id.as_str(), d))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn node(&self, id: &str) -> Option<&PEDescriptor> {
        self.nodes.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    /// Connections leaving `(node, port)` in insertion order.
    pub fn connections_from(&self, node: &str, port: &str) -> Vec<(usize, &Connection)> {
        self.connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.src == node && c.src_port == port)
            .collect()
    }

    /// Connections leaving `node`, any output port.
    pub fn connections_out(&self, node: &str) -> Vec<(usize, &Connection)> {
        self.connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.src == node)
            .collect()
    }

    /// Connections arriving at `node`, any input port.
    pub fn connections_into(&self, node: &str) -> Vec<(usize, &Connection)> {
        self.connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.dst == node)
            .collect()
    }

    /// Output ports of `node` with no outgoing connection.
    pub fn terminal_ports(&self, node: &str) -> Vec<&str> {
        match self.nodes.get(node) {
            Some(desc) => desc
                .outputs()
                .iter()
                .filter(|port| {
                    !self
                        .connections
                        .iter()
                        .any(|c| c.src == node && c.src_port == port.name)
                })
                .map(|port| port.name.as_str())
                .collect(),
            None => Vec::new(),
        }
    }

    /// All nodes with in-degree zero, in insertion order.
    pub fn find_roots(&self) -> Result<Vec<String>, GraphError> {
        let roots: Vec<String> = self
            .nodes
            .keys()
            .filter(|id| !self.connections.iter().any(|c| &c.dst == *id))
            .cloned()
            .collect();
        if roots.is_empty() {
            return Err(GraphError::NoRoot);
        }
        Ok(roots)
    }

    /// Kahn's algorithm with insertion-order tie-breaking; errors on cycles.
    pub fn topo_order(&self) -> Result<Vec<String>, GraphError> {
        let mut in_degree: IndexMap<&str, usize> =
            self.nodes.keys().map(|id| (id.as_str(), 0)).collect();
        for connection in &self.connections {
            if let Some(degree) = in_degree.get_mut(connection.dst.as_str()) {
                *degree += 1;
            }
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut remaining = in_degree;
        while order.len() < self.nodes.len() {
            let next = remaining
                .iter()
                .find(|(_, &degree)| degree == 0)
                .map(|(&id, _)| id.to_string());
            let Some(id) = next else {
                return Err(GraphError::CycleDetected);
            };
            remaining.shift_remove(id.as_str());
            for connection in &self.connections {
                if connection.src == id {
                    if let Some(degree) = remaining.get_mut(connection.dst.as_str()) {
                        *degree = degree.saturating_sub(1);
                    }
                }
            }
            order.push(id);
        }
        Ok(order)
    }

    /// Full invariant check, for graphs built outside `add_node`/`connect`
    /// (e.g. deserialized documents).
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::InvalidGraph("graph has no nodes".into()));
        }
        let mut names = Vec::new();
        for descriptor in self.nodes.values() {
            if names.contains(&descriptor.name()) {
                return Err(GraphError::DuplicateName(descriptor.name().into()));
            }
            names.push(descriptor.name());
        }
        for connection in &self.connections {
            let src = self
                .nodes
                .get(&connection.src)
                .ok_or_else(|| GraphError::UnknownNode(connection.src.clone()))?;
            let dst = self
                .nodes
                .get(&connection.dst)
                .ok_or_else(|| GraphError::UnknownNode(connection.dst.clone()))?;
            check_port(src, &connection.src, &connection.src_port, Direction::Out)?;
            check_port(dst, &connection.dst, &connection.dst_port, Direction::In)?;
        }
        self.topo_order()?;
        self.find_roots()?;
        Ok(())
    }

    /// Collects the deduplicated, sorted import roots of every node.
    pub fn all_imports(&self) -> Vec<String> {
        let mut imports: Vec<String> = self
            .nodes
            .values()
            .flat_map(|d| d.imports().iter().cloned())
            .collect();
        imports.sort();
        imports.dedup();
        imports
    }
}

fn check_port(
    descriptor: &PEDescriptor,
    node: &str,
    port: &str,
    wanted: Direction,
) -> Result<(), GraphError> {
    let has_in = descriptor.input(port).is_some();
    let has_out = descriptor.output(port).is_some();
    match wanted {
        Direction::Out if has_out => Ok(()),
        Direction::In if has_in => Ok(()),
        _ if has_in || has_out => {
            Err(GraphError::WrongDirection { node: node.into(), port: port.into() })
        }
        _ => Err(GraphError::UnknownPort { node: node.into(), port: port.into() }),
    }
}

// Wire form: {"name", "description"?, "nodes": {id: descriptor}, "connections": [...]}.
#[derive(Serialize, Deserialize)]
struct GraphDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    nodes: IndexMap<String, PEDescriptor>,
    #[serde(default)]
    connections: Vec<ConnectionDoc>,
}

#[derive(Serialize, Deserialize)]
struct ConnectionDoc {
    src: String,
    #[serde(rename = "srcPort")]
    src_port: String,
    dst: String,
    #[serde(rename = "dstPort")]
    dst_port: String,
}

impl Serialize for WorkflowGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphDoc {
            name: self.name.clone(),
            description: self.description.clone(),
            nodes: self.nodes.clone(),
            connections: self
                .connections
                .iter()
                .map(|c| ConnectionDoc {
                    src: c.src.clone(),
                    src_port: c.src_port.clone(),
                    dst: c.dst.clone(),
                    dst_port: c.dst_port.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WorkflowGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(deserializer)?;
        let mut graph = WorkflowGraph::new(doc.name);
        graph.description = doc.description;
        for (id, descriptor) in doc.nodes {
            graph
                .add_node(id, descriptor)
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        for c in doc.connections {
            graph
                .connect(&c.src, &c.src_port, &c.dst, &c.dst_port)
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{GroupingSpec, PEDescriptor};
    use super::*;
    use proptest::prelude::*;

    fn isprime_graph() -> WorkflowGraph {
        let mut g = WorkflowGraph::new("IsPrime");
        g.add_node("NumberProducer", PEDescriptor::producer("NumberProducer")).unwrap();
        g.add_node("IsPrime", PEDescriptor::iterative("IsPrime")).unwrap();
        g.add_node("PrintPrime", PEDescriptor::consumer("PrintPrime")).unwrap();
        g.connect("NumberProducer", "output", "IsPrime", "input").unwrap();
        g.connect("IsPrime", "output", "PrintPrime", "input").unwrap();
        g
    }

    #[test]
    fn connect_builds_the_pipeline() {
        let g = isprime_graph();
        assert_eq!(g.connections().len(), 2);
        g.validate().unwrap();
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let mut g = WorkflowGraph::new("loop");
        let a = PEDescriptor::generic(
            "A",
            vec![("input".into(), GroupingSpec::Shuffle)],
            vec!["output".into()],
        )
        .unwrap();
        g.add_node("A", a).unwrap();
        let err = g.connect("A", "output", "A", "input").unwrap_err();
        assert_eq!(err, GraphError::CycleDetected);
        // Rejected edge must not linger.
        assert!(g.connections().is_empty());
    }

    #[test]
    fn two_node_cycle_is_rejected() {
        let mut g = WorkflowGraph::new("loop2");
        for id in ["A", "B"] {
            g.add_node(
                id,
                PEDescriptor::generic(
                    id,
                    vec![("input".into(), GroupingSpec::Shuffle)],
                    vec!["output".into()],
                )
                .unwrap(),
            )
            .unwrap();
        }
        g.connect("A", "output", "B", "input").unwrap();
        assert_eq!(g.connect("B", "output", "A", "input"), Err(GraphError::CycleDetected));
    }

    #[test]
    fn wrong_direction_detected() {
        let mut g = WorkflowGraph::new("dir");
        let a = PEDescriptor::generic(
            "A",
            vec![("input".into(), GroupingSpec::Shuffle)],
            vec![],
        )
        .unwrap();
        let b = PEDescriptor::generic(
            "B",
            vec![("input".into(), GroupingSpec::Shuffle)],
            vec![],
        )
        .unwrap();
        g.add_node("A", a).unwrap();
        g.add_node("B", b).unwrap();
        let err = g.connect("A", "input", "B", "input").unwrap_err();
        assert_eq!(err, GraphError::WrongDirection { node: "A".into(), port: "input".into() });
    }

    #[test]
    fn unknown_node_and_port() {
        let mut g = isprime_graph();
        assert_eq!(
            g.connect("Ghost", "output", "IsPrime", "input"),
            Err(GraphError::UnknownNode("Ghost".into()))
        );
        assert_eq!(
            g.connect("NumberProducer", "nope", "IsPrime", "input"),
            Err(GraphError::UnknownPort { node: "NumberProducer".into(), port: "nope".into() })
        );
    }

    #[test]
    fn roots_in_insertion_order() {
        let g = isprime_graph();
        assert_eq!(g.find_roots().unwrap(), vec!["NumberProducer".to_string()]);

        let mut single = WorkflowGraph::new("one");
        single.add_node("P", PEDescriptor::producer("P")).unwrap();
        assert_eq!(single.find_roots().unwrap(), vec!["P".to_string()]);

        // Two producers feeding one merge node.
        let mut diamond = WorkflowGraph::new("merge");
        diamond.add_node("P1", PEDescriptor::producer("P1")).unwrap();
        diamond.add_node("P2", PEDescriptor::producer("P2")).unwrap();
        let merge = PEDescriptor::generic(
            "M",
            vec![("left".into(), GroupingSpec::Shuffle), ("right".into(), GroupingSpec::Shuffle)],
            vec![],
        )
        .unwrap();
        diamond.add_node("M", merge).unwrap();
        diamond.connect("P1", "output", "M", "left").unwrap();
        diamond.connect("P2", "output", "M", "right").unwrap();
        assert_eq!(diamond.find_roots().unwrap(), vec!["P1".to_string(), "P2".to_string()]);
    }

    #[test]
    fn duplicate_descriptor_name_rejected() {
        let mut g = WorkflowGraph::new("dup");
        g.add_node("a", PEDescriptor::producer("Same")).unwrap();
        let err = g.add_node("b", PEDescriptor::producer("Same")).unwrap_err();
        assert_eq!(err, GraphError::DuplicateName("Same".into()));
    }

    #[test]
    fn terminal_ports_exclude_connected_outputs() {
        let g = isprime_graph();
        assert!(g.terminal_ports("NumberProducer").is_empty());
        assert!(g.terminal_ports("IsPrime").is_empty());
        assert!(g.terminal_ports("PrintPrime").is_empty());

        let mut open = WorkflowGraph::new("open");
        open.add_node("P", PEDescriptor::producer("P")).unwrap();
        assert_eq!(open.terminal_ports("P"), vec!["output"]);
    }

    #[test]
    fn graph_round_trips_through_json() {
        let g = isprime_graph();
        let json = serde_json::to_string(&g).unwrap();
        let back: WorkflowGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        // Node order survives the round trip.
        let ids: Vec<&str> = back.node_ids().collect();
        assert_eq!(ids, vec!["NumberProducer", "IsPrime", "PrintPrime"]);
    }

    #[test]
    fn deserializing_a_cyclic_document_fails() {
        let doc = serde_json::json!({
            "name": "bad",
            "nodes": {
                "A": {"name": "A", "kind": "Generic",
                      "inputs": [{"name": "input"}], "outputs": ["output"]},
            },
            "connections": [
                {"src": "A", "srcPort": "output", "dst": "A", "dstPort": "input"},
            ],
        });
        let result: Result<WorkflowGraph, _> = serde_json::from_value(doc);
        assert!(result.is_err());
    }

    // Random DAGs built through connect() always topo-sort.
    proptest! {
        #[test]
        fn accepted_graphs_are_acyclic(edges in proptest::collection::vec((0usize..6, 0usize..6), 0..15)) {
            let mut g = WorkflowGraph::new("random");
            for i in 0..6 {
                let d = PEDescriptor::generic(
                    format!("N{i}"),
                    vec![("input".into(), GroupingSpec::Shuffle)],
                    vec!["output".into()],
                ).unwrap();
                g.add_node(format!("n{i}"), d).unwrap();
            }
            for (a, b) in edges {
                // Errors (cycles, self-loops) are fine; accepted edges must
                // keep the graph sortable.
                let _ = g.connect(&format!("n{a}"), "output", &format!("n{b}"), "input");
                prop_assert!(g.topo_order().is_ok());
            }
        }
    }
}
