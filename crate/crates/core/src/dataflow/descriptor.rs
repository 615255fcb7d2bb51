//! Processing element descriptors: kind, ports, groupings, and the opaque
//! source payload carried through registration.

use super::GraphError;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Role of a PE, which fixes its port arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PEKind {
    /// No inputs, exactly one output port named `output`.
    Producer,
    /// One input port `input`, one output port `output`.
    Iterative,
    /// One input port `input`, no outputs.
    Consumer,
    /// Any number of ports.
    Generic,
}

impl PEKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PEKind::Producer => "Producer",
            PEKind::Iterative => "Iterative",
            PEKind::Consumer => "Consumer",
            PEKind::Generic => "Generic",
        }
    }
}

/// Port direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// A named port on one PE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
}

/// Routing rule attached to an input port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingSpec {
    /// Round-robin per sender.
    Shuffle,
    /// Hash of the projected tuple elements; equal projections always land
    /// on the same instance.
    GroupBy(Vec<usize>),
}

impl GroupingSpec {
    pub fn group_by(indices: impl Into<Vec<usize>>) -> Self {
        GroupingSpec::GroupBy(indices.into())
    }

    fn validate(&self) -> Result<(), GraphError> {
        if let GroupingSpec::GroupBy(indices) = self {
            if indices.is_empty() {
                return Err(GraphError::InvalidDescriptor(
                    "group-by requires at least one index".into(),
                ));
            }
        }
        Ok(())
    }
}

// Wire form: the string "shuffle" or an array of indices.
impl Serialize for GroupingSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            GroupingSpec::Shuffle => serializer.serialize_str("shuffle"),
            GroupingSpec::GroupBy(indices) => indices.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for GroupingSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Tag(String),
            Indices(Vec<usize>),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Tag(tag) if tag == "shuffle" => Ok(GroupingSpec::Shuffle),
            Wire::Tag(tag) => Err(D::Error::custom(format!("unknown grouping `{tag}`"))),
            Wire::Indices(indices) if indices.is_empty() => {
                Err(D::Error::custom("group-by requires at least one index"))
            }
            Wire::Indices(indices) => Ok(GroupingSpec::GroupBy(indices)),
        }
    }
}

/// An input port together with its grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub port: PortSpec,
    pub grouping: GroupingSpec,
}

/// Declared shape of one PE: the unit of registration and search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PEDescriptor {
    name: String,
    kind: PEKind,
    inputs: Vec<InputSpec>,
    outputs: Vec<PortSpec>,
    stateful: bool,
    source_text: String,
    imports: Vec<String>,
}

impl PEDescriptor {
    /// Builds a descriptor, checking kind/port arity and name validity.
    pub fn new(
        name: impl Into<String>,
        kind: PEKind,
        inputs: Vec<(String, GroupingSpec)>,
        outputs: Vec<String>,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(GraphError::InvalidDescriptor("name must be nonempty".into()));
        }
        let inputs: Vec<InputSpec> = inputs
            .into_iter()
            .map(|(port, grouping)| InputSpec {
                port: PortSpec { name: port, direction: Direction::In },
                grouping,
            })
            .collect();
        let outputs: Vec<PortSpec> = outputs
            .into_iter()
            .map(|port| PortSpec { name: port, direction: Direction::Out })
            .collect();

        for spec in &inputs {
            spec.grouping.validate()?;
        }
        check_port_names(&name, inputs.iter().map(|i| &i.port))?;
        check_port_names(&name, outputs.iter())?;
        check_arity(&name, kind, &inputs, &outputs)?;

        Ok(PEDescriptor {
            name,
            kind,
            inputs,
            outputs,
            stateful: false,
            source_text: String::new(),
            imports: Vec::new(),
        })
    }

    /// Producer with the standard single `output` port.
    pub fn producer(name: impl Into<String>) -> Self {
        PEDescriptor::new(name, PEKind::Producer, vec![], vec!["output".into()])
            .expect("standard producer shape is valid")
    }

    /// Iterative PE with the standard `input`/`output` ports, shuffle routed.
    pub fn iterative(name: impl Into<String>) -> Self {
        PEDescriptor::new(
            name,
            PEKind::Iterative,
            vec![("input".into(), GroupingSpec::Shuffle)],
            vec!["output".into()],
        )
        .expect("standard iterative shape is valid")
    }

    /// Consumer with the standard single `input` port, shuffle routed.
    pub fn consumer(name: impl Into<String>) -> Self {
        PEDescriptor::new(
            name,
            PEKind::Consumer,
            vec![("input".into(), GroupingSpec::Shuffle)],
            vec![],
        )
        .expect("standard consumer shape is valid")
    }

    /// Generic PE with explicit ports.
    pub fn generic(
        name: impl Into<String>,
        inputs: Vec<(String, GroupingSpec)>,
        outputs: Vec<String>,
    ) -> Result<Self, GraphError> {
        PEDescriptor::new(name, PEKind::Generic, inputs, outputs)
    }

    pub fn with_grouping(mut self, port: &str, grouping: GroupingSpec) -> Result<Self, GraphError> {
        grouping.validate()?;
        match self.inputs.iter_mut().find(|i| i.port.name == port) {
            Some(input) => {
                input.grouping = grouping;
                Ok(self)
            }
            None => Err(GraphError::UnknownPort { node: self.name.clone(), port: port.into() }),
        }
    }

    pub fn with_stateful(mut self, stateful: bool) -> Self {
        self.stateful = stateful;
        self
    }

    pub fn with_source(mut self, source_text: impl Into<String>) -> Self {
        self.source_text = source_text.into();
        self
    }

    pub fn with_imports(mut self, imports: Vec<String>) -> Self {
        self.imports = imports;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PEKind {
        self.kind
    }

    pub fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PortSpec] {
        &self.outputs
    }

    pub fn stateful(&self) -> bool {
        self.stateful
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn imports(&self) -> &[String] {
        &self.imports
    }

    pub fn input(&self, port: &str) -> Option<&InputSpec> {
        self.inputs.iter().find(|i| i.port.name == port)
    }

    pub fn output(&self, port: &str) -> Option<&PortSpec> {
        self.outputs.iter().find(|o| o.name == port)
    }
}

fn check_port_names<'a>(
    pe: &str,
    ports: impl Iterator<Item = &'a PortSpec>,
) -> Result<(), GraphError> {
    let mut seen = Vec::new();
    for port in ports {
        if port.name.trim().is_empty() {
            return Err(GraphError::InvalidDescriptor(format!(
                "PE `{pe}` has a port with an empty name"
            )));
        }
        if seen.contains(&&port.name) {
            return Err(GraphError::InvalidDescriptor(format!(
                "PE `{pe}` declares port `{}` twice",
                port.name
            )));
        }
        seen.push(&port.name);
    }
    Ok(())
}

fn check_arity(
    pe: &str,
    kind: PEKind,
    inputs: &[InputSpec],
    outputs: &[PortSpec],
) -> Result<(), GraphError> {
    let fail = |msg: String| Err(GraphError::InvalidDescriptor(msg));
    match kind {
        PEKind::Producer => {
            if !inputs.is_empty() {
                return fail(format!("producer `{pe}` must have no input ports"));
            }
            if outputs.len() != 1 || outputs[0].name != "output" {
                return fail(format!("producer `{pe}` must have exactly one output port `output`"));
            }
        }
        PEKind::Iterative => {
            if inputs.len() != 1 || inputs[0].port.name != "input" {
                return fail(format!("iterative `{pe}` must have exactly one input port `input`"));
            }
            if outputs.len() != 1 || outputs[0].name != "output" {
                return fail(format!(
                    "iterative `{pe}` must have exactly one output port `output`"
                ));
            }
        }
        PEKind::Consumer => {
            if inputs.len() != 1 || inputs[0].port.name != "input" {
                return fail(format!("consumer `{pe}` must have exactly one input port `input`"));
            }
            if !outputs.is_empty() {
                return fail(format!("consumer `{pe}` must have no output ports"));
            }
        }
        PEKind::Generic => {}
    }
    Ok(())
}

// Wire form of a descriptor. Source text travels base64-encoded under the
// `code` key, matching the registration payload.
#[derive(Serialize, Deserialize)]
struct DescriptorDoc {
    name: String,
    kind: PEKind,
    #[serde(default)]
    inputs: Vec<InputDoc>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    stateful: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    code: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    imports: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct InputDoc {
    name: String,
    #[serde(default = "default_grouping")]
    grouping: GroupingSpec,
}

fn default_grouping() -> GroupingSpec {
    GroupingSpec::Shuffle
}

impl Serialize for PEDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use base64::Engine as _;
        let code = if self.source_text.is_empty() {
            None
        } else {
            Some(base64::engine::general_purpose::STANDARD.encode(self.source_text.as_bytes()))
        };
        DescriptorDoc {
            name: self.name.clone(),
            kind: self.kind,
            inputs: self
                .inputs
                .iter()
                .map(|i| InputDoc { name: i.port.name.clone(), grouping: i.grouping.clone() })
                .collect(),
            outputs: self.outputs.iter().map(|o| o.name.clone()).collect(),
            stateful: self.stateful,
            code,
            imports: self.imports.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PEDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use base64::Engine as _;
        let doc = DescriptorDoc::deserialize(deserializer)?;
        let inputs = doc.inputs.into_iter().map(|i| (i.name, i.grouping)).collect();
        let mut descriptor = PEDescriptor::new(doc.name, doc.kind, inputs, doc.outputs)
            .map_err(|e| D::Error::custom(e.to_string()))?
            .with_stateful(doc.stateful)
            .with_imports(doc.imports);
        if let Some(code) = doc.code {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(code.as_bytes())
                .map_err(|e| D::Error::custom(format!("invalid base64 in descriptor code: {e}")))?;
            let text = String::from_utf8(bytes)
                .map_err(|_| D::Error::custom("descriptor code is not valid UTF-8"))?;
            descriptor = descriptor.with_source(text);
        }
        Ok(descriptor)
    }
}
