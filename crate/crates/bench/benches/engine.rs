//! End-to-end engine throughput under both mappings.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use laminar_core::dataflow::{compile, GroupingSpec, MappingId, PEDescriptor, WorkflowGraph};
use laminar_core::engine::{Behavior, BehaviorCatalog, Context, Engine, FnBehavior, RunOptions};
use laminar_core::Value;
use serde_json::json;
use std::sync::Arc;

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

fn word_count_setup(items: usize) -> (Engine, WorkflowGraph, u64) {
    let values: Vec<Value> = (0..items).map(|i| json!([format!("w{}", i % 50), 1])).collect();
    let mut catalog = BehaviorCatalog::new();
    catalog.register("Words", move |_| {
        Box::new(ListProducer { items: values.clone(), position: 0 })
    });
    catalog.register("Count", |_| {
        let mut totals = std::collections::HashMap::<String, i64>::new();
        Box::new(FnBehavior(move |input: Option<Value>, ctx: &mut Context| {
            let Some(Value::Array(tuple)) = input else { return };
            let word = tuple[0].as_str().unwrap().to_string();
            let total = totals.entry(word.clone()).or_insert(0);
            *total += tuple[1].as_i64().unwrap();
            ctx.emit("output", json!([word, *total]));
        }))
    });

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
    (Engine::new(Arc::new(catalog)), graph, items as u64)
}

fn bench_word_count(c: &mut Criterion) {
    let mut group = c.benchmark_group("word_count_2000");
    group.sample_size(10);

    let (engine, graph, iterations) = word_count_setup(2000);
    let simple = compile(&graph, MappingId::Simple, 1).unwrap();
    group.bench_function("simple", |b| {
        b.iter_batched(
            || (),
            |()| engine.execute(&simple, iterations, None, &RunOptions::default()).unwrap(),
            BatchSize::PerIteration,
        )
    });

    let multi = compile(&graph, MappingId::Multi, 4).unwrap();
    group.bench_function("multi_4", |b| {
        b.iter_batched(
            || (),
            |()| engine.execute(&multi, iterations, None, &RunOptions::default()).unwrap(),
            BatchSize::PerIteration,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_word_count);
criterion_main!(benches);
