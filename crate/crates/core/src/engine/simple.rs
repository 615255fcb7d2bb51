//! Single-threaded plan execution.

use super::behavior::{Behavior, BehaviorCatalog, Context, InstanceInfo};
use super::{instance_seed, EngineError, RunOptions, RunResult};
use crate::dataflow::{route, ConcretePlan};
use crate::Value;
use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

struct Slot {
    behavior: Box<dyn Behavior>,
    ctx: Context,
}

struct SimpleRun<'a> {
    plan: &'a ConcretePlan,
    slots: HashMap<(String, usize), Slot>,
    // Per (connection, sender instance) shuffle counters.
    counters: HashMap<(usize, usize), u64>,
    outputs: BTreeMap<String, Vec<Value>>,
}

/// Runs the plan on the calling thread. Per producer iteration, emissions
/// propagate depth-first before the next iteration starts, so results are
/// deterministic for deterministic behaviors.
pub(crate) fn run_simple(
    plan: &ConcretePlan,
    catalog: &BehaviorCatalog,
    iterations: u64,
    resource_root: Option<PathBuf>,
    options: &RunOptions,
) -> Result<RunResult, EngineError> {
    let mut run = SimpleRun {
        plan,
        slots: HashMap::new(),
        counters: HashMap::new(),
        outputs: BTreeMap::new(),
    };

    for (id, descriptor) in plan.graph().nodes() {
        if !plan.graph().terminal_ports(id).is_empty()
            || descriptor.kind() == crate::dataflow::PEKind::Consumer
        {
            run.outputs.insert(id.to_string(), Vec::new());
        }
        for instance in 0..plan.instances(id) {
            let info = InstanceInfo {
                node: id.to_string(),
                instance,
                seed: instance_seed(options.seed, id, instance),
                args: options.args.clone(),
            };
            let behavior = catalog
                .instantiate(descriptor.name(), &info)
                .ok_or_else(|| EngineError::UnresolvedPE(descriptor.name().into()))?;
            let ctx = Context::new(instance, resource_root.clone());
            run.slots.insert((id.to_string(), instance), Slot { behavior, ctx });
        }
    }

    let roots = plan.graph().find_roots()?;
    let mut failure: Option<String> = None;

    'run: {
        // Setup pass, nodes in insertion order.
        for id in plan.graph().node_ids() {
            for instance in 0..plan.instances(id) {
                if let Err(error) = run.invoke_setup(id, instance) {
                    failure = Some(error);
                    break 'run;
                }
            }
        }
        // Iterations round-robin over each root's instances.
        for iteration in 0..iterations {
            for root in &roots {
                let n = plan.instances(root);
                let instance = (iteration % n as u64) as usize;
                if let Err(error) = run.deliver(root, instance, None) {
                    failure = Some(error);
                    break 'run;
                }
            }
        }
    }

    let (stdout, captured) = run.drain_instances();
    let mut outputs = run.outputs;
    for (node, values) in captured {
        outputs.entry(node).or_default().extend(values);
    }

    Ok(match failure {
        None => RunResult::completed(stdout, outputs),
        Some(error) => RunResult::failed(stdout, outputs, error),
    })
}

impl SimpleRun<'_> {
    fn invoke_setup(&mut self, node: &str, instance: usize) -> Result<(), String> {
        let slot = self
            .slots
            .get_mut(&(node.to_string(), instance))
            .expect("slot exists for every instance");
        catch_unwind(AssertUnwindSafe(|| slot.behavior.setup(&mut slot.ctx)))
            .map_err(|cause| panic_message(node, &cause))?;
        let emissions = slot.ctx.take_emissions();
        self.dispatch_all(node, instance, emissions)
    }

    /// Feeds one value (or a producer tick) into an instance and recursively
    /// propagates everything it emits.
    fn deliver(&mut self, node: &str, instance: usize, input: Option<Value>) -> Result<(), String> {
        let slot = self
            .slots
            .get_mut(&(node.to_string(), instance))
            .expect("slot exists for every instance");
        catch_unwind(AssertUnwindSafe(|| slot.behavior.process(input, &mut slot.ctx)))
            .map_err(|cause| panic_message(node, &cause))?;
        let emissions = slot.ctx.take_emissions();
        self.dispatch_all(node, instance, emissions)
    }

    fn dispatch_all(
        &mut self,
        node: &str,
        instance: usize,
        emissions: Vec<(String, Value)>,
    ) -> Result<(), String> {
        for (port, value) in emissions {
            self.dispatch(node, instance, &port, value)?;
        }
        Ok(())
    }

    fn dispatch(
        &mut self,
        node: &str,
        instance: usize,
        port: &str,
        value: Value,
    ) -> Result<(), String> {
        let descriptor = self.plan.graph().node(node).expect("node exists");
        if descriptor.output(port).is_none() {
            return Err(format!("PE `{node}` emitted on undeclared port `{port}`"));
        }
        let connections: Vec<(usize, String, String)> = self
            .plan
            .graph()
            .connections_from(node, port)
            .into_iter()
            .map(|(idx, c)| (idx, c.dst.clone(), c.dst_port.clone()))
            .collect();
        if connections.is_empty() {
            self.outputs.entry(node.to_string()).or_default().push(value);
            return Ok(());
        }
        for (conn_idx, dst, _dst_port) in connections {
            let n = self.plan.instances(&dst);
            let counter = self.counters.entry((conn_idx, instance)).or_insert(0);
            let sender_counter = *counter;
            *counter += 1;
            let target = route(self.plan.routing(conn_idx), &value, sender_counter, n)
                .map_err(|e| format!("routing failure leaving PE `{node}`: {e}"))?;
            self.deliver(&dst, target, Some(value.clone()))?;
        }
        Ok(())
    }

    /// Collects stdout and captured values, nodes in insertion order and
    /// instances in index order.
    fn drain_instances(&mut self) -> (Vec<String>, Vec<(String, Vec<Value>)>) {
        let mut stdout = Vec::new();
        let mut captured = Vec::new();
        let ids: Vec<String> = self.plan.graph().node_ids().map(str::to_string).collect();
        for id in ids {
            for instance in 0..self.plan.instances(&id) {
                if let Some(slot) = self.slots.get_mut(&(id.clone(), instance)) {
                    stdout.extend(slot.ctx.take_stdout());
                    let values = slot.ctx.take_captured();
                    if !values.is_empty() {
                        captured.push((id.clone(), values));
                    }
                }
            }
        }
        (stdout, captured)
    }
}

pub(super) fn panic_message(node: &str, cause: &Box<dyn std::any::Any + Send>) -> String {
    let detail = cause
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| cause.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into());
    format!("behavior panic in PE `{node}`: {detail}")
}
