//! Engine integration: sequential/parallel equivalence, termination,
//! group-by locality, failure isolation, and resource handling.

use laminar_core::dataflow::{compile, GroupingSpec, MappingId, PEDescriptor, WorkflowGraph};
use laminar_core::engine::{
    builtin_catalog, instance_seed, isprime_graph, passes_prime_filter, Behavior, BehaviorCatalog,
    Context, Engine, FnBehavior, ResourceEntry, RunOptions, RunStatus,
};
use laminar_core::hash::canonical_bytes;
use laminar_core::Value;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::HashMap;
use std::sync::Arc;

fn engine_with(catalog: BehaviorCatalog) -> Engine {
    Engine::new(Arc::new(catalog))
}

/// The numbers a seeded producer instance will draw, recomputed from the
/// public seed derivation.
fn seeded_draws(seed: u64, node: &str, count: usize) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, node, 0));
    (0..count).map(|_| rng.random_range(1..=1000)).collect()
}

fn sorted_multiset(values: &[Value]) -> Vec<Vec<u8>> {
    let mut encoded: Vec<Vec<u8>> = values.iter().map(canonical_bytes).collect();
    encoded.sort();
    encoded
}

fn assert_same_multisets(
    simple: &std::collections::BTreeMap<String, Vec<Value>>,
    multi: &std::collections::BTreeMap<String, Vec<Value>>,
) {
    let keys: std::collections::BTreeSet<&String> = simple.keys().chain(multi.keys()).collect();
    for key in keys {
        let lhs = simple.get(key).map(Vec::as_slice).unwrap_or_default();
        let rhs = multi.get(key).map(Vec::as_slice).unwrap_or_default();
        assert_eq!(
            sorted_multiset(lhs),
            sorted_multiset(rhs),
            "terminal multiset differs for node `{key}`"
        );
    }
}

#[test]
fn seeded_prime_run_matches_oracle_under_both_mappings() {
    let engine = engine_with(builtin_catalog());
    let graph = isprime_graph();
    let seed = 42;
    let iterations = 5;

    // Independent oracle: redraw the numbers and filter with the divisor
    // range predicate.
    let draws = seeded_draws(seed, "NumberProducer", iterations as usize);
    let expected: Vec<i64> = draws.iter().copied().filter(|&n| passes_prime_filter(n)).collect();

    let options = RunOptions::default().with_seed(seed);
    for (mapping, processes) in [(MappingId::Simple, 1), (MappingId::Multi, 5)] {
        let plan = compile(&graph, mapping, processes).unwrap();
        let result = engine.execute(&plan, iterations, None, &options).unwrap();
        assert_eq!(result.status, RunStatus::Completed, "{mapping}: {:?}", result.error);
        let primes: Vec<i64> = result.outputs["PrintPrime"]
            .iter()
            .map(|v| v.as_i64().unwrap())
            .collect();
        assert_eq!(primes.len(), expected.len(), "{mapping}");
        let mut got = primes.clone();
        let mut want = expected.clone();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want, "{mapping}");
        // Each prime is also printed.
        for prime in &expected {
            assert!(result
                .stdout
                .iter()
                .any(|line| line == &format!("the num {prime} is prime")));
        }
    }
}

#[test]
fn zero_iterations_completes_with_empty_outputs() {
    let engine = engine_with(builtin_catalog());
    let plan = compile(&isprime_graph(), MappingId::Multi, 5).unwrap();
    let result = engine.execute(&plan, 0, None, &RunOptions::default()).unwrap();
    assert_eq!(result.status, RunStatus::Completed);
    assert!(result.outputs.values().all(Vec::is_empty));
}

#[test]
fn unregistered_behavior_is_rejected_before_start() {
    let engine = engine_with(builtin_catalog());
    let mut graph = WorkflowGraph::new("ghostly");
    graph.add_node("Ghost", PEDescriptor::producer("Ghost")).unwrap();
    let plan = compile(&graph, MappingId::Simple, 1).unwrap();
    let error = engine.execute(&plan, 1, None, &RunOptions::default()).unwrap_err();
    assert_eq!(
        error,
        laminar_core::engine::EngineError::UnresolvedPE("Ghost".into())
    );
}

#[test]
fn redis_mapping_is_reserved() {
    let engine = engine_with(builtin_catalog());
    let plan = compile(&isprime_graph(), MappingId::Redis, 5).unwrap();
    let error = engine.execute(&plan, 1, None, &RunOptions::default()).unwrap_err();
    assert!(matches!(error, laminar_core::engine::EngineError::UnsupportedMapping(_)));
}

#[test]
fn missing_requirements_block_the_run() {
    let mut catalog = builtin_catalog();
    catalog.register("Exotic", |_| Box::new(FnBehavior(|_, _: &mut Context| {})));
    let engine = engine_with(catalog);
    let mut graph = WorkflowGraph::new("exotic");
    graph
        .add_node(
            "Exotic",
            PEDescriptor::producer("Exotic").with_imports(vec!["astropy".into()]),
        )
        .unwrap();
    let plan = compile(&graph, MappingId::Simple, 1).unwrap();
    let error = engine.execute(&plan, 1, None, &RunOptions::default()).unwrap_err();
    assert_eq!(
        error,
        laminar_core::engine::EngineError::MissingRequirements(vec!["astropy".into()])
    );

    // A narrowed capability set changes the verdict, not the mechanism.
    let narrowed = engine
        .clone()
        .with_capabilities(["random".to_string(), "collections".to_string()]);
    assert!(narrowed.missing_requirements(&["random".into()]).is_empty());
    assert_eq!(narrowed.missing_requirements(&["astropy".into()]), vec!["astropy".to_string()]);
}

/// Producer that walks a fixed list, one element per tick.
struct ListProducer {
    items: Vec<Value>,
    position: usize,
}

impl Behavior for ListProducer {
    fn process(&mut self, _input: Option<Value>, ctx: &mut Context) {
        if let Some(item) = self.items.get(self.position) {
            ctx.emit("output", item.clone());
            self.position += 1;
        }
    }
}

fn list_producer_catalog(name: &str, items: Vec<Value>) -> BehaviorCatalog {
    let mut catalog = BehaviorCatalog::new();
    let name = name.to_string();
    catalog.register(name, move |_| {
        Box::new(ListProducer { items: items.clone(), position: 0 })
    });
    catalog
}

/// Counter that tags each update with the instance that performed it.
#[derive(Default)]
struct TaggedCounter {
    totals: HashMap<String, i64>,
}

impl Behavior for TaggedCounter {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        let Some(Value::Array(tuple)) = input else { return };
        let word = tuple[0].as_str().unwrap().to_string();
        let count = tuple[1].as_i64().unwrap();
        let total = self.totals.entry(word.clone()).or_insert(0);
        *total += count;
        ctx.emit("output", json!([word, *total, ctx.instance()]));
    }
}

fn word_count_graph() -> WorkflowGraph {
    let mut graph = WorkflowGraph::new("WordCount");
    graph.add_node("Words", PEDescriptor::producer("Words")).unwrap();
    graph
        .add_node(
            "Count",
            PEDescriptor::generic(
                "Count",
                vec![("input".into(), GroupingSpec::group_by(vec![0]))],
                vec!["output".into()],
            )
            .unwrap()
            .with_stateful(true),
        )
        .unwrap();
    graph.connect("Words", "output", "Count", "input").unwrap();
    graph
}

fn synthetic_corpus(words: usize, vocabulary: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..words).map(|_| format!("word{}", rng.random_range(0..vocabulary))).collect()
}

#[test]
fn group_by_word_count_matches_sequential_oracle() {
    let corpus = synthetic_corpus(2_000, 40, 7);
    let items: Vec<Value> = corpus.iter().map(|w| json!([w, 1])).collect();

    // Sequential associative-array oracle.
    let mut oracle: HashMap<&str, i64> = HashMap::new();
    for word in &corpus {
        *oracle.entry(word).or_insert(0) += 1;
    }

    let mut catalog = list_producer_catalog("Words", items);
    catalog.register("Count", |_| Box::new(TaggedCounter::default()));
    let engine = engine_with(catalog);

    let graph = word_count_graph();
    let plan = compile(&graph, MappingId::Multi, 4).unwrap();
    let result = engine
        .execute(&plan, corpus.len() as u64, None, &RunOptions::default())
        .unwrap();
    assert_eq!(result.status, RunStatus::Completed, "{:?}", result.error);

    // Final totals: the largest running total seen per word. Each word must
    // be touched by exactly one instance.
    let mut finals: HashMap<String, i64> = HashMap::new();
    let mut owners: HashMap<String, u64> = HashMap::new();
    for update in &result.outputs["Count"] {
        let tuple = update.as_array().unwrap();
        let word = tuple[0].as_str().unwrap().to_string();
        let total = tuple[1].as_i64().unwrap();
        let instance = tuple[2].as_u64().unwrap();
        let entry = finals.entry(word.clone()).or_insert(0);
        *entry = (*entry).max(total);
        if let Some(previous) = owners.insert(word.clone(), instance) {
            assert_eq!(previous, instance, "word `{word}` updated in two instances");
        }
    }
    assert_eq!(finals.len(), oracle.len());
    for (word, count) in oracle {
        assert_eq!(finals[word], count, "count differs for `{word}`");
    }
}

#[test]
fn stateful_counter_retains_totals_across_iterations() {
    let items = vec![json!(["the", 1]), json!(["the", 1]), json!(["a", 1])];
    let mut catalog = list_producer_catalog("Words", items);
    catalog.register("Count", |_| Box::new(TaggedCounter::default()));
    let engine = engine_with(catalog);
    let plan = compile(&word_count_graph(), MappingId::Simple, 1).unwrap();
    let result = engine.execute(&plan, 3, None, &RunOptions::default()).unwrap();
    let updates: Vec<(String, i64)> = result.outputs["Count"]
        .iter()
        .map(|v| {
            let tuple = v.as_array().unwrap();
            (tuple[0].as_str().unwrap().into(), tuple[1].as_i64().unwrap())
        })
        .collect();
    assert_eq!(
        updates,
        vec![("the".into(), 1), ("the".into(), 2), ("a".into(), 1)]
    );
}

#[test]
fn silent_producer_reaches_no_consumer() {
    let mut catalog = BehaviorCatalog::new();
    catalog.register("Quiet", |_| Box::new(FnBehavior(|_, _: &mut Context| {})));
    catalog.register("Sink", |_| {
        Box::new(FnBehavior(|input: Option<Value>, ctx: &mut Context| {
            if let Some(v) = input {
                ctx.capture(v);
            }
        }))
    });
    let mut graph = WorkflowGraph::new("quiet");
    graph.add_node("Quiet", PEDescriptor::producer("Quiet")).unwrap();
    graph.add_node("Sink", PEDescriptor::consumer("Sink")).unwrap();
    graph.connect("Quiet", "output", "Sink", "input").unwrap();

    let engine = engine_with(catalog);
    for (mapping, processes) in [(MappingId::Simple, 1), (MappingId::Multi, 2)] {
        let plan = compile(&graph, mapping, processes).unwrap();
        let result = engine.execute(&plan, 10, None, &RunOptions::default()).unwrap();
        assert_eq!(result.status, RunStatus::Completed);
        assert!(result.outputs["Sink"].is_empty());
    }
}

/// Deterministic per-item transform used in randomized pipelines.
fn arithmetic_stage(stage: u64) -> impl Fn(Option<Value>, &mut Context) + Send + Clone {
    move |input: Option<Value>, ctx: &mut Context| {
        let Some(n) = input.as_ref().and_then(Value::as_i64) else { return };
        // Filter every third value, transform the rest.
        if n % 3 != 0 {
            ctx.emit("output", json!(n * 2 + stage as i64));
        }
    }
}

#[test]
fn mapping_equivalence_on_fixed_pipelines() {
    for nodes in 2..=5usize {
        let items: Vec<Value> = (0..300).map(|i| json!(i)).collect();
        let mut catalog = list_producer_catalog("Source", items);
        let mut graph = WorkflowGraph::new("pipeline");
        graph.add_node("Source", PEDescriptor::producer("Source")).unwrap();
        let mut previous = "Source".to_string();
        for stage in 1..nodes {
            let name = format!("Stage{stage}");
            let transform = arithmetic_stage(stage as u64);
            catalog.register(name.clone(), move |_| Box::new(FnBehavior(transform.clone())));
            graph
                .add_node(name.clone(), PEDescriptor::iterative(name.clone()))
                .unwrap();
            graph.connect(&previous, "output", &name, "input").unwrap();
            previous = name;
        }
        let engine = engine_with(catalog);
        let simple = engine
            .execute(
                &compile(&graph, MappingId::Simple, 1).unwrap(),
                300,
                None,
                &RunOptions::default(),
            )
            .unwrap();
        for extra in 0..3 {
            let plan = compile(&graph, MappingId::Multi, nodes + extra).unwrap();
            let multi = engine.execute(&plan, 300, None, &RunOptions::default()).unwrap();
            assert_eq!(multi.status, RunStatus::Completed);
            assert_same_multisets(&simple.outputs, &multi.outputs);
        }
    }
}

#[test]
fn fan_in_receives_everything_before_terminating() {
    // Two producers feed one sink; EOS accounting must wait for both.
    let mut catalog = BehaviorCatalog::new();
    for name in ["Left", "Right"] {
        let base = if name == "Left" { 0 } else { 1000 };
        let items: Vec<Value> = (0..100).map(|i| json!(base + i)).collect();
        catalog.register(name, move |_| {
            Box::new(ListProducer { items: items.clone(), position: 0 })
        });
    }
    catalog.register("Merge", |_| {
        Box::new(FnBehavior(|input: Option<Value>, ctx: &mut Context| {
            if let Some(v) = input {
                ctx.capture(v);
            }
        }))
    });
    let mut graph = WorkflowGraph::new("fanin");
    graph.add_node("Left", PEDescriptor::producer("Left")).unwrap();
    graph.add_node("Right", PEDescriptor::producer("Right")).unwrap();
    let merge = PEDescriptor::generic(
        "Merge",
        vec![
            ("a".into(), GroupingSpec::Shuffle),
            ("b".into(), GroupingSpec::Shuffle),
        ],
        vec![],
    )
    .unwrap();
    graph.add_node("Merge", merge).unwrap();
    graph.connect("Left", "output", "Merge", "a").unwrap();
    graph.connect("Right", "output", "Merge", "b").unwrap();

    let engine = engine_with(catalog);
    let plan = compile(&graph, MappingId::Multi, 4).unwrap();
    let result = engine.execute(&plan, 100, None, &RunOptions::default()).unwrap();
    assert_eq!(result.status, RunStatus::Completed);
    assert_eq!(result.outputs["Merge"].len(), 200);
}

#[test]
fn fan_out_broadcasts_to_every_downstream() {
    let items: Vec<Value> = (0..50).map(|i| json!(i)).collect();
    let mut catalog = list_producer_catalog("Source", items);
    for name in ["SinkA", "SinkB"] {
        catalog.register(name, |_| {
            Box::new(FnBehavior(|input: Option<Value>, ctx: &mut Context| {
                if let Some(v) = input {
                    ctx.capture(v);
                }
            }))
        });
    }
    let mut graph = WorkflowGraph::new("fanout");
    graph.add_node("Source", PEDescriptor::producer("Source")).unwrap();
    graph.add_node("SinkA", PEDescriptor::consumer("SinkA")).unwrap();
    graph.add_node("SinkB", PEDescriptor::consumer("SinkB")).unwrap();
    graph.connect("Source", "output", "SinkA", "input").unwrap();
    graph.connect("Source", "output", "SinkB", "input").unwrap();

    let engine = engine_with(catalog);
    for (mapping, processes) in [(MappingId::Simple, 1), (MappingId::Multi, 3)] {
        let plan = compile(&graph, mapping, processes).unwrap();
        let result = engine.execute(&plan, 50, None, &RunOptions::default()).unwrap();
        assert_eq!(result.outputs["SinkA"].len(), 50, "{mapping}");
        assert_eq!(result.outputs["SinkB"].len(), 50, "{mapping}");
    }
}

#[test]
fn messages_between_fixed_pair_arrive_in_send_order() {
    let items: Vec<Value> = (0..500).map(|i| json!(i)).collect();
    let mut catalog = list_producer_catalog("Source", items);
    catalog.register("Sink", |_| {
        Box::new(FnBehavior(|input: Option<Value>, ctx: &mut Context| {
            if let Some(v) = input {
                ctx.capture(v);
            }
        }))
    });
    let mut graph = WorkflowGraph::new("ordered");
    graph.add_node("Source", PEDescriptor::producer("Source")).unwrap();
    graph.add_node("Sink", PEDescriptor::consumer("Sink")).unwrap();
    graph.connect("Source", "output", "Sink", "input").unwrap();

    let engine = engine_with(catalog);
    let plan = compile(&graph, MappingId::Multi, 2).unwrap();
    let result = engine.execute(&plan, 500, None, &RunOptions::default()).unwrap();
    let received: Vec<i64> = result.outputs["Sink"].iter().map(|v| v.as_i64().unwrap()).collect();
    assert_eq!(received, (0..500).collect::<Vec<i64>>());
}

#[test]
fn behavior_panic_fails_the_run_and_names_the_node() {
    let items: Vec<Value> = (0..10).map(|i| json!(i)).collect();
    let mut catalog = list_producer_catalog("Source", items);
    catalog.register("Boom", |_| {
        Box::new(FnBehavior(|input: Option<Value>, _: &mut Context| {
            if input.and_then(|v| v.as_i64()) == Some(5) {
                panic!("payload 5 is unacceptable");
            }
        }))
    });
    let mut graph = WorkflowGraph::new("explosive");
    graph.add_node("Source", PEDescriptor::producer("Source")).unwrap();
    graph.add_node("Boom", PEDescriptor::consumer("Boom")).unwrap();
    graph.connect("Source", "output", "Boom", "input").unwrap();

    let engine = engine_with(catalog);
    for (mapping, processes) in [(MappingId::Simple, 1), (MappingId::Multi, 2)] {
        let plan = compile(&graph, mapping, processes).unwrap();
        let started = std::time::Instant::now();
        let result = engine.execute(&plan, 10, None, &RunOptions::default()).unwrap();
        assert_eq!(result.status, RunStatus::Failed, "{mapping}");
        let error = result.error.expect("failure detail");
        assert!(error.contains("Boom"), "error should name the node: {error}");
        assert!(started.elapsed() < std::time::Duration::from_secs(5), "must not hang");
    }
}

#[test]
fn emitting_on_undeclared_port_fails_cleanly() {
    let mut catalog = BehaviorCatalog::new();
    catalog.register("Rogue", |_| {
        Box::new(FnBehavior(|_, ctx: &mut Context| ctx.emit("sideband", json!(1))))
    });
    let mut graph = WorkflowGraph::new("rogue");
    graph.add_node("Rogue", PEDescriptor::producer("Rogue")).unwrap();
    let engine = engine_with(catalog);
    let plan = compile(&graph, MappingId::Simple, 1).unwrap();
    let result = engine.execute(&plan, 1, None, &RunOptions::default()).unwrap();
    assert_eq!(result.status, RunStatus::Failed);
    assert!(result.error.unwrap().contains("sideband"));
}

#[test]
fn resource_bundle_feeds_the_extinction_pipeline() {
    use base64::Engine as _;
    let coordinates = "10.5 -3.25\n181.25 42.0\n300.0 -61.5\n";
    let bundle = vec![ResourceEntry {
        path: "coordinates.txt".into(),
        content: base64::engine::general_purpose::STANDARD.encode(coordinates),
    }];

    let engine = engine_with(builtin_catalog());
    let graph = laminar_core::engine::extinction_graph();

    // Oracle: parse the file and apply the synthetic row/extinction math.
    let expected: Vec<Value> = coordinates
        .lines()
        .map(|line| {
            let mut parts = line.split_whitespace();
            let ra: f64 = parts.next().unwrap().parse().unwrap();
            let dec: f64 = parts.next().unwrap().parse().unwrap();
            let (mtype, log_r25) = laminar_core::engine::synthetic_survey_row(ra, dec);
            json!([mtype, log_r25, laminar_core::engine::extinction_value(mtype, log_r25)])
        })
        .collect();

    for (mapping, processes) in [(MappingId::Simple, 1), (MappingId::Multi, 4)] {
        let plan = compile(&graph, mapping, processes).unwrap();
        let result = engine
            .execute(&plan, 3, Some(&bundle), &RunOptions::default())
            .unwrap();
        assert_eq!(result.status, RunStatus::Completed, "{mapping}: {:?}", result.error);
        assert_eq!(
            sorted_multiset(&result.outputs["ExtinctionCalc"]),
            sorted_multiset(&expected),
            "{mapping}"
        );
    }
}

#[test]
fn stdout_preserves_per_instance_order() {
    let mut catalog = BehaviorCatalog::new();
    catalog.register("Chatty", |_| {
        let mut tick = 0u64;
        Box::new(FnBehavior(move |_, ctx: &mut Context| {
            ctx.print(format!("tick {tick}"));
            tick += 1;
        }))
    });
    let mut graph = WorkflowGraph::new("chatty");
    graph.add_node("Chatty", PEDescriptor::producer("Chatty")).unwrap();
    let engine = engine_with(catalog);
    let plan = compile(&graph, MappingId::Multi, 1).unwrap();
    let result = engine.execute(&plan, 5, None, &RunOptions::default()).unwrap();
    assert_eq!(
        result.stdout,
        (0..5).map(|i| format!("tick {i}")).collect::<Vec<_>>()
    );
}
