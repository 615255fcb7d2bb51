//! PE source files and import scanning.
//!
//! A PE source file is ordinary code text prefixed with a small header
//! block of `#@` directives, so the client can build a descriptor without
//! executing anything:
//!
//! ```text
//! #@pe CountWords Generic
//! #@in input group-by=0
//! #@out output
//! #@stateful
//! ```
//!
//! The first directive must be `#@pe <Name> <Kind>`. Producer, Iterative,
//! and Consumer get their standard ports automatically when no port
//! directives are present. The full file text (header included) is the
//! registered source payload.

use anyhow::{bail, Context as _, Result};
use laminar_core::dataflow::{GroupingSpec, PEDescriptor, PEKind};

/// Parses a PE source file into its descriptor, with detected imports and
/// the full text attached.
pub fn parse_pe_source(text: &str) -> Result<PEDescriptor> {
    let mut name_kind: Option<(String, PEKind)> = None;
    let mut inputs: Vec<(String, GroupingSpec)> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut stateful = false;

    for line in text.lines() {
        let Some(directive) = line.trim().strip_prefix("#@") else {
            continue;
        };
        let mut parts = directive.split_whitespace();
        match parts.next() {
            Some("pe") => {
                let name = parts.next().context("#@pe needs a name")?;
                let kind = match parts.next().context("#@pe needs a kind")? {
                    "Producer" => PEKind::Producer,
                    "Iterative" => PEKind::Iterative,
                    "Consumer" => PEKind::Consumer,
                    "Generic" => PEKind::Generic,
                    other => bail!("unknown PE kind `{other}`"),
                };
                name_kind = Some((name.to_string(), kind));
            }
            Some("in") => {
                let port = parts.next().context("#@in needs a port name")?;
                let grouping = match parts.next() {
                    None | Some("shuffle") => GroupingSpec::Shuffle,
                    Some(spec) => match spec.strip_prefix("group-by=") {
                        Some(indices) => {
                            let indices: Vec<usize> = indices
                                .split(',')
                                .map(|i| i.trim().parse::<usize>())
                                .collect::<Result<_, _>>()
                                .context("group-by indices must be integers")?;
                            GroupingSpec::GroupBy(indices)
                        }
                        None => bail!("unknown grouping `{spec}`"),
                    },
                };
                inputs.push((port.to_string(), grouping));
            }
            Some("out") => {
                outputs.push(parts.next().context("#@out needs a port name")?.to_string());
            }
            Some("stateful") => stateful = true,
            Some(other) => bail!("unknown directive `#@{other}`"),
            None => {}
        }
    }

    let (name, kind) = name_kind.context("missing `#@pe <Name> <Kind>` header")?;
    if inputs.is_empty() && outputs.is_empty() {
        match kind {
            PEKind::Producer => outputs.push("output".into()),
            PEKind::Iterative => {
                inputs.push(("input".into(), GroupingSpec::Shuffle));
                outputs.push("output".into());
            }
            PEKind::Consumer => inputs.push(("input".into(), GroupingSpec::Shuffle)),
            PEKind::Generic => {}
        }
    }

    let descriptor = PEDescriptor::new(name, kind, inputs, outputs)
        .map_err(|e| anyhow::anyhow!("invalid PE header: {e}"))?
        .with_stateful(stateful)
        .with_source(text)
        .with_imports(scan_imports(text));
    Ok(descriptor)
}

/// Collects the first path segment of every import declaration line
/// (`import X...` / `from X import ...`), top-level or nested,
/// deduplicated and sorted.
pub fn scan_imports(source: &str) -> Vec<String> {
    let mut roots = Vec::new();
    for line in source.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("import ") {
            for target in rest.split(',') {
                let target = target.trim();
                let target = target.split_whitespace().next().unwrap_or("");
                push_root(&mut roots, target);
            }
        } else if let Some(rest) = line.strip_prefix("from ") {
            if let Some(target) = rest.split_whitespace().next() {
                push_root(&mut roots, target);
            }
        }
    }
    roots.sort();
    roots.dedup();
    roots
}

fn push_root(roots: &mut Vec<String>, target: &str) {
    let root = target.split('.').next().unwrap_or("");
    if !root.is_empty()
        && root.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && root.chars().all(|c| c.is_alphanumeric() || c == '_')
    {
        roots.push(root.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNT_WORDS: &str = "#@pe CountWords Generic\n\
                               #@in input group-by=0\n\
                               #@out output\n\
                               #@stateful\n\
                               class CountWords(GenericPE):\n\
                               \x20   def __init__(self):\n\
                               \x20       from collections import defaultdict\n\
                               \x20       self.count = defaultdict(int)\n\
                               \x20   def _process(self, inputs):\n\
                               \x20       import os\n\
                               \x20       word, count = inputs['input']\n\
                               \x20       self.count[word] += count\n";

    #[test]
    fn parses_generic_header() {
        let descriptor = parse_pe_source(COUNT_WORDS).unwrap();
        assert_eq!(descriptor.name(), "CountWords");
        assert_eq!(descriptor.kind(), PEKind::Generic);
        assert!(descriptor.stateful());
        assert_eq!(descriptor.inputs()[0].grouping, GroupingSpec::GroupBy(vec![0]));
        assert_eq!(descriptor.imports(), ["collections".to_string(), "os".to_string()]);
        assert_eq!(descriptor.source_text(), COUNT_WORDS);
    }

    #[test]
    fn standard_kinds_default_their_ports() {
        let producer = parse_pe_source("#@pe P Producer\nreturn 1\n").unwrap();
        assert_eq!(producer.outputs()[0].name, "output");
        let consumer = parse_pe_source("#@pe C Consumer\nprint(x)\n").unwrap();
        assert_eq!(consumer.inputs()[0].port.name, "input");
    }

    #[test]
    fn missing_header_is_an_error() {
        assert!(parse_pe_source("class X: pass\n").is_err());
        assert!(parse_pe_source("#@pe OnlyName\n").is_err());
        assert!(parse_pe_source("#@pe X Unknown\n").is_err());
    }

    #[test]
    fn nested_and_dotted_imports_reduce_to_roots() {
        // Mixed top-level and nested imports, per the stateful counter shape.
        let imports = scan_imports(COUNT_WORDS);
        assert_eq!(imports, ["collections", "os"]);

        assert_eq!(scan_imports("import a.b.c\n"), ["a"]);
        assert_eq!(scan_imports("import os, sys\n"), ["os", "sys"]);
        assert_eq!(scan_imports("import numpy as np\n"), ["numpy"]);
        assert!(scan_imports("x = 1\n").is_empty());
    }

    #[test]
    fn scan_is_order_independent() {
        let a = "import os\nfrom collections import defaultdict\n";
        let b = "from collections import defaultdict\nimport os\n";
        assert_eq!(scan_imports(a), scan_imports(b));
    }
}
