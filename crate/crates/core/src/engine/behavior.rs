//! Runtime behaviors behind PE descriptors.
//!
//! Source payloads in the registry are opaque text; what actually runs is
//! resolved by descriptor name from a [`BehaviorCatalog`]. Each instance
//! owns its behavior box, so mutable state never crosses workers.

use crate::Value;
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

/// Construction-time facts for one instance.
#[derive(Debug, Clone)]
pub struct InstanceInfo {
    /// Node id within the graph.
    pub node: String,
    /// Instance index within the node, `0..instance_count`.
    pub instance: usize,
    /// Deterministic seed derived from the run seed, node, and instance.
    pub seed: u64,
    /// Request-level behavior arguments (e.g. `seed`, file names).
    pub args: serde_json::Map<String, Value>,
}

/// Per-invocation facilities handed to a behavior.
pub struct Context {
    instance: usize,
    emissions: Vec<(String, Value)>,
    captured: Vec<Value>,
    stdout: Vec<String>,
    resource_root: Option<PathBuf>,
}

impl Context {
    pub(crate) fn new(instance: usize, resource_root: Option<PathBuf>) -> Self {
        Context {
            instance,
            emissions: Vec::new(),
            captured: Vec::new(),
            stdout: Vec::new(),
            resource_root,
        }
    }

    /// Index of the running instance within its node.
    pub fn instance(&self) -> usize {
        self.instance
    }

    /// Emits `value` on the named output port. Values emitted on ports with
    /// no downstream connection become terminal outputs of the run.
    pub fn emit(&mut self, port: impl Into<String>, value: Value) {
        self.emissions.push((port.into(), value));
    }

    /// Records a terminal value directly, bypassing ports. This is how
    /// consumers (which have no output ports) hand results back to the
    /// client.
    pub fn capture(&mut self, value: Value) {
        self.captured.push(value);
    }

    /// Captured print line; the engine returns these in the run result
    /// instead of touching process stdout.
    pub fn print(&mut self, line: impl Into<String>) {
        self.stdout.push(line.into());
    }

    /// Path of a file materialized from the run's resource bundle.
    pub fn resource_path(&self, relative: &str) -> Option<PathBuf> {
        self.resource_root.as_ref().map(|root| root.join(relative))
    }

    pub(crate) fn take_emissions(&mut self) -> Vec<(String, Value)> {
        std::mem::take(&mut self.emissions)
    }

    pub(crate) fn take_captured(&mut self) -> Vec<Value> {
        std::mem::take(&mut self.captured)
    }

    pub(crate) fn take_stdout(&mut self) -> Vec<String> {
        std::mem::take(&mut self.stdout)
    }
}

/// One PE's runtime logic. `setup` runs once per instance before any data;
/// `process` maps an input value (or `None`, for producers being driven) to
/// emissions on the context.
pub trait Behavior: Send {
    fn setup(&mut self, _ctx: &mut Context) {}
    fn process(&mut self, input: Option<Value>, ctx: &mut Context);
}

/// Factory producing a fresh behavior box per instance.
pub type BehaviorFactory = Arc<dyn Fn(&InstanceInfo) -> Box<dyn Behavior> + Send + Sync>;

/// Named catalog resolving descriptor names to behavior factories.
#[derive(Clone, Default)]
pub struct BehaviorCatalog {
    factories: HashMap<String, BehaviorFactory>,
}

impl BehaviorCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(&InstanceInfo) -> Box<dyn Behavior> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Arc::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.factories.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    pub fn instantiate(&self, name: &str, info: &InstanceInfo) -> Option<Box<dyn Behavior>> {
        self.factories.get(name).map(|factory| factory(info))
    }
}

/// Stateless behavior from a plain closure over `(input, ctx)`.
pub struct FnBehavior<F>(pub F);

impl<F> Behavior for FnBehavior<F>
where
    F: FnMut(Option<Value>, &mut Context) + Send,
{
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        (self.0)(input, ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn catalog_resolves_by_name() {
        let mut catalog = BehaviorCatalog::new();
        catalog.register("Echo", |_info| {
            Box::new(FnBehavior(|input: Option<Value>, ctx: &mut Context| {
                if let Some(v) = input {
                    ctx.emit("output", v);
                }
            }))
        });
        assert!(catalog.contains("Echo"));
        assert!(!catalog.contains("Ghost"));

        let info = InstanceInfo {
            node: "Echo".into(),
            instance: 0,
            seed: 0,
            args: serde_json::Map::new(),
        };
        let mut behavior = catalog.instantiate("Echo", &info).unwrap();
        let mut ctx = Context::new(0, None);
        behavior.process(Some(json!(5)), &mut ctx);
        assert_eq!(ctx.take_emissions(), vec![("output".to_string(), json!(5))]);
    }

    #[test]
    fn context_collects_prints_and_captures() {
        let mut ctx = Context::new(2, None);
        ctx.print("hello");
        ctx.capture(json!("x"));
        assert_eq!(ctx.instance(), 2);
        assert_eq!(ctx.take_stdout(), vec!["hello".to_string()]);
        assert_eq!(ctx.take_captured(), vec![json!("x")]);
    }
}
