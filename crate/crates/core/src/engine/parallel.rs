//! Multi-worker plan execution over bounded in-process channels.
//!
//! One worker thread per instance. The only inter-worker communication is
//! ordered message channels; behaviors and their state are owned by exactly
//! one worker. Termination: after a root exhausts its iterations it emits
//! an end-of-stream marker on each outgoing connection to every downstream
//! instance; a non-root terminates once it has received EOS from every
//! upstream (connection, sender-instance) pair, then forwards its own EOS.

use super::behavior::{BehaviorCatalog, Context, InstanceInfo};
use super::simple::panic_message;
use super::{instance_seed, iterations_for_instance, EngineError, RunOptions, RunResult};
use crate::dataflow::{route, ConcretePlan};
use crate::Value;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::mpsc::{Receiver, SyncSender};

enum Msg {
    Data(Value),
    Eos,
}

struct Envelope {
    connection: usize,
    sender: usize,
    msg: Msg,
}

struct InstanceReport {
    node: String,
    stdout: Vec<String>,
    terminal: Vec<Value>,
    captured: Vec<Value>,
    error: Option<String>,
}

/// Identifies every instance of the plan with a flat index, spawn order =
/// node insertion order then instance index.
struct Layout {
    addresses: Vec<(String, usize)>,
    base: HashMap<String, usize>,
}

impl Layout {
    fn new(plan: &ConcretePlan) -> Self {
        let mut addresses = Vec::new();
        let mut base = HashMap::new();
        for id in plan.graph().node_ids() {
            base.insert(id.to_string(), addresses.len());
            for instance in 0..plan.instances(id) {
                addresses.push((id.to_string(), instance));
            }
        }
        Layout { addresses, base }
    }

    fn flat(&self, node: &str, instance: usize) -> usize {
        self.base[node] + instance
    }

    fn len(&self) -> usize {
        self.addresses.len()
    }
}

pub(crate) fn run_parallel(
    plan: &ConcretePlan,
    catalog: &BehaviorCatalog,
    iterations: u64,
    resource_root: Option<PathBuf>,
    options: &RunOptions,
) -> Result<RunResult, EngineError> {
    let layout = Layout::new(plan);
    let roots: HashSet<String> = plan.graph().find_roots()?.into_iter().collect();

    let mut senders = Vec::with_capacity(layout.len());
    let mut receivers = Vec::with_capacity(layout.len());
    for _ in 0..layout.len() {
        let (tx, rx) = std::sync::mpsc::sync_channel::<Envelope>(options.channel_capacity.max(1));
        senders.push(tx);
        receivers.push(Some(rx));
    }

    let reports: Vec<InstanceReport> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(layout.len());
        for (flat, (node, instance)) in layout.addresses.iter().enumerate() {
            let inbox = receivers[flat].take().expect("each inbox is taken once");
            let senders = senders.clone();
            let resource_root = resource_root.clone();
            let layout = &layout;
            let roots = &roots;
            let node = node.clone();
            let instance = *instance;
            handles.push(scope.spawn(move || {
                run_instance(Worker {
                    plan,
                    catalog,
                    layout,
                    options,
                    iterations,
                    node,
                    instance,
                    flat,
                    is_root: roots.contains(layout.addresses[flat].0.as_str()),
                    inbox,
                    senders,
                    resource_root,
                })
            }));
        }
        // Drop the primary sender clones so channels close once workers finish.
        drop(senders);
        handles
            .into_iter()
            .map(|handle| {
                handle.join().unwrap_or_else(|cause| InstanceReport {
                    node: "<worker>".into(),
                    stdout: Vec::new(),
                    terminal: Vec::new(),
                    captured: Vec::new(),
                    error: Some(panic_message("<worker>", &cause)),
                })
            })
            .collect()
    });

    Ok(merge_reports(plan, reports))
}

struct Worker<'a> {
    plan: &'a ConcretePlan,
    catalog: &'a BehaviorCatalog,
    layout: &'a Layout,
    options: &'a RunOptions,
    iterations: u64,
    node: String,
    instance: usize,
    flat: usize,
    is_root: bool,
    inbox: Receiver<Envelope>,
    senders: Vec<SyncSender<Envelope>>,
    resource_root: Option<PathBuf>,
}

fn run_instance(worker: Worker<'_>) -> InstanceReport {
    let Worker {
        plan,
        catalog,
        layout,
        options,
        iterations,
        node,
        instance,
        flat,
        is_root,
        inbox,
        senders,
        resource_root,
    } = worker;

    let descriptor = plan.graph().node(&node).expect("node exists");
    let info = InstanceInfo {
        node: node.clone(),
        instance,
        seed: instance_seed(options.seed, &node, instance),
        args: options.args.clone(),
    };
    let mut behavior = match catalog.instantiate(descriptor.name(), &info) {
        Some(behavior) => behavior,
        None => {
            return InstanceReport {
                node: node.clone(),
                stdout: Vec::new(),
                terminal: Vec::new(),
                captured: Vec::new(),
                error: Some(format!("no behavior registered for PE `{node}`")),
            }
        }
    };
    let mut ctx = Context::new(instance, resource_root);
    let mut terminal = Vec::new();
    let mut counters: HashMap<usize, u64> = HashMap::new();
    let mut error: Option<String> = None;

    // Expected EOS markers: one per (incoming connection, sender instance).
    let mut expected: HashSet<(usize, usize)> = HashSet::new();
    for (conn_idx, connection) in plan.graph().connections_into(&node) {
        for src_instance in 0..plan.instances(&connection.src) {
            expected.insert((conn_idx, layout.flat(&connection.src, src_instance)));
        }
    }

    let setup = catch_unwind(AssertUnwindSafe(|| behavior.setup(&mut ctx)));
    match setup {
        Ok(()) => {
            let emissions = ctx.take_emissions();
            if let Err(e) = dispatch(
                plan, layout, &node, flat, &mut counters, &senders, &mut terminal, emissions,
            ) {
                error = Some(e);
            }
        }
        Err(cause) => error = Some(panic_message(&node, &cause)),
    }

    if is_root && error.is_none() {
        let share = iterations_for_instance(iterations, instance, plan.instances(&node));
        for _ in 0..share {
            match catch_unwind(AssertUnwindSafe(|| behavior.process(None, &mut ctx))) {
                Ok(()) => {
                    let emissions = ctx.take_emissions();
                    if let Err(e) = dispatch(
                        plan, layout, &node, flat, &mut counters, &senders, &mut terminal,
                        emissions,
                    ) {
                        error = Some(e);
                        break;
                    }
                }
                Err(cause) => {
                    error = Some(panic_message(&node, &cause));
                    break;
                }
            }
        }
    }

    // Non-roots consume until every upstream sender has said EOS. After a
    // failure we keep draining without processing, so upstream senders are
    // never blocked on a full channel.
    while !expected.is_empty() {
        let Ok(envelope) = inbox.recv() else {
            // All senders disconnected; treat as EOS from everyone.
            break;
        };
        match envelope.msg {
            Msg::Eos => {
                expected.remove(&(envelope.connection, envelope.sender));
            }
            Msg::Data(value) if error.is_none() => {
                match catch_unwind(AssertUnwindSafe(|| behavior.process(Some(value), &mut ctx))) {
                    Ok(()) => {
                        let emissions = ctx.take_emissions();
                        if let Err(e) = dispatch(
                            plan, layout, &node, flat, &mut counters, &senders, &mut terminal,
                            emissions,
                        ) {
                            error = Some(e);
                        }
                    }
                    Err(cause) => error = Some(panic_message(&node, &cause)),
                }
            }
            Msg::Data(_) => {}
        }
    }

    // Forward EOS on every outgoing connection to every downstream instance.
    for (conn_idx, connection) in plan.graph().connections_out(&node) {
        for dst_instance in 0..plan.instances(&connection.dst) {
            let target = layout.flat(&connection.dst, dst_instance);
            let _ = senders[target].send(Envelope {
                connection: conn_idx,
                sender: flat,
                msg: Msg::Eos,
            });
        }
    }

    InstanceReport {
        node,
        stdout: ctx.take_stdout(),
        terminal,
        captured: ctx.take_captured(),
        error,
    }
}

#[allow(clippy::too_many_arguments)]
fn dispatch(
    plan: &ConcretePlan,
    layout: &Layout,
    node: &str,
    flat: usize,
    counters: &mut HashMap<usize, u64>,
    senders: &[SyncSender<Envelope>],
    terminal: &mut Vec<Value>,
    emissions: Vec<(String, Value)>,
) -> Result<(), String> {
    let descriptor = plan.graph().node(node).expect("node exists");
    for (port, value) in emissions {
        if descriptor.output(&port).is_none() {
            return Err(format!("PE `{node}` emitted on undeclared port `{port}`"));
        }
        let connections = plan.graph().connections_from(node, &port);
        if connections.is_empty() {
            terminal.push(value);
            continue;
        }
        for (conn_idx, connection) in connections {
            let n = plan.instances(&connection.dst);
            let counter = counters.entry(conn_idx).or_insert(0);
            let sender_counter = *counter;
            *counter += 1;
            let target = route(plan.routing(conn_idx), &value, sender_counter, n)
                .map_err(|e| format!("routing failure leaving PE `{node}`: {e}"))?;
            let target = layout.flat(&connection.dst, target);
            senders[target]
                .send(Envelope { connection: conn_idx, sender: flat, msg: Msg::Data(value.clone()) })
                .map_err(|_| format!("worker for `{}` stopped receiving", connection.dst))?;
        }
    }
    Ok(())
}

fn merge_reports(plan: &ConcretePlan, reports: Vec<InstanceReport>) -> RunResult {
    let mut outputs: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for (id, descriptor) in plan.graph().nodes() {
        if !plan.graph().terminal_ports(id).is_empty()
            || descriptor.kind() == crate::dataflow::PEKind::Consumer
        {
            outputs.insert(id.to_string(), Vec::new());
        }
    }
    let mut stdout = Vec::new();
    let mut error: Option<String> = None;
    for report in reports {
        stdout.extend(report.stdout);
        if !report.terminal.is_empty() || !report.captured.is_empty() {
            let entry = outputs.entry(report.node.clone()).or_default();
            entry.extend(report.terminal);
            entry.extend(report.captured);
        }
        if error.is_none() {
            error = report.error;
        }
    }
    match error {
        None => RunResult::completed(stdout, outputs),
        Some(e) => RunResult::failed(stdout, outputs, e),
    }
}
