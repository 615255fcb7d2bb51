//! Built-in PE catalog: the behaviors the stock server can execute, with
//! their descriptors and source payloads for registration and search.

use super::behavior::{Behavior, BehaviorCatalog, Context, InstanceInfo};
use crate::dataflow::{GroupingSpec, PEDescriptor, WorkflowGraph};
use crate::hash::{canonical_bytes, stable_hash};
use crate::Value;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::{HashMap, VecDeque};

const NUMBER_PRODUCER_SRC: &str = r#"import random

class NumberProducer(ProducerPE):
    def __init__(self):
        ProducerPE.__init__(self)

    def _process(self):
        # Generate a random number
        result = random.randint(1, 1000)
        # Return the number as the output
        return result
"#;

const IS_PRIME_SRC: &str = r#"class IsPrime(IterativePE):
    def __init__(self):
        IterativePE.__init__(self)

    def _process(self, num):
        # Check if the given input (num) is prime
        print("before checking data - is prime or not")
        if all(num % i != 0 for i in range(2, num)):
            # Only if the input is prime, the value is returned
            return num
"#;

const PRINT_PRIME_SRC: &str = r#"class PrintPrime(ConsumerPE):
    def __init__(self):
        ConsumerPE.__init__(self)

    def _process(self, num):
        # Print the prime number received on the input
        print("the num %s is prime" % num)
"#;

const COUNT_WORDS_SRC: &str = r#"class CountWords(GenericPE):
    def __init__(self):
        from collections import defaultdict
        GenericPE.__init__(self)
        # Count words arriving as (word, count) tuples, grouped by word
        self._add_input("input", grouping=[0])
        self._add_output("output")
        self.count = defaultdict(int)

    def _process(self, inputs):
        import os
        word, count = inputs["input"]
        self.count[word] += count
"#;

const COORDINATE_READER_SRC: &str = r#"import os

class CoordinateReader(ProducerPE):
    def __init__(self):
        ProducerPE.__init__(self)
        # Read sky coordinates, one "ra dec" pair per line
        self.lines = None

    def _process(self):
        if self.lines is None:
            with open(os.path.join("resources", "coordinates.txt")) as f:
                self.lines = f.readlines()
        if self.lines:
            ra, dec = self.lines.pop(0).split()
            return (float(ra), float(dec))
"#;

const SURVEY_LOOKUP_SRC: &str = r#"import urllib

class SurveyLookup(IterativePE):
    def __init__(self):
        IterativePE.__init__(self)

    def _process(self, coords):
        # Fetch the catalog row for a coordinate pair and attach the
        # morphology type and isophotal diameter columns
        ra, dec = coords
        row = lookup(ra, dec)
        return (ra, dec, row.mtype, row.log_r25)
"#;

const COLUMN_FILTER_SRC: &str = r#"class ColumnFilter(IterativePE):
    def __init__(self):
        IterativePE.__init__(self)

    def _process(self, row):
        # Keep only the morphology type and diameter columns
        ra, dec, mtype, log_r25 = row
        return (mtype, log_r25)
"#;

const EXTINCTION_CALC_SRC: &str = r#"import math

class ExtinctionCalc(ConsumerPE):
    def __init__(self):
        ConsumerPE.__init__(self)

    def _process(self, row):
        # Compute internal extinction from morphology type and diameter
        mtype, log_r25 = row
        extinction = coefficient(mtype) * log_r25
        print("internal extinction: %s" % extinction)
"#;

/// Descriptors for every built-in PE, sources and imports attached.
pub fn builtin_descriptors() -> Vec<PEDescriptor> {
    vec![
        PEDescriptor::producer("NumberProducer")
            .with_source(NUMBER_PRODUCER_SRC)
            .with_imports(vec!["random".into()]),
        PEDescriptor::iterative("IsPrime").with_source(IS_PRIME_SRC),
        PEDescriptor::consumer("PrintPrime").with_source(PRINT_PRIME_SRC),
        PEDescriptor::generic(
            "CountWords",
            vec![("input".into(), GroupingSpec::group_by(vec![0]))],
            vec!["output".into()],
        )
        .expect("valid shape")
        .with_stateful(true)
        .with_source(COUNT_WORDS_SRC)
        .with_imports(vec!["collections".into(), "os".into()]),
        PEDescriptor::producer("CoordinateReader")
            .with_source(COORDINATE_READER_SRC)
            .with_imports(vec!["os".into()]),
        PEDescriptor::iterative("SurveyLookup")
            .with_source(SURVEY_LOOKUP_SRC)
            .with_imports(vec!["urllib".into()]),
        PEDescriptor::iterative("ColumnFilter").with_source(COLUMN_FILTER_SRC),
        PEDescriptor::consumer("ExtinctionCalc")
            .with_source(EXTINCTION_CALC_SRC)
            .with_imports(vec!["math".into()]),
    ]
}

pub fn builtin_descriptor(name: &str) -> Option<PEDescriptor> {
    builtin_descriptors().into_iter().find(|d| d.name() == name)
}

/// The random-prime pipeline: producer, primality filter, printing sink.
pub fn isprime_graph() -> WorkflowGraph {
    let mut graph = WorkflowGraph::new("IsPrime");
    for name in ["NumberProducer", "IsPrime", "PrintPrime"] {
        graph
            .add_node(name, builtin_descriptor(name).expect("builtin exists"))
            .expect("fresh graph");
    }
    graph.connect("NumberProducer", "output", "IsPrime", "input").expect("valid edge");
    graph.connect("IsPrime", "output", "PrintPrime", "input").expect("valid edge");
    graph
}

/// Four-stage pipeline that reads coordinates from the run's resources,
/// synthesizes catalog rows, filters columns, and computes an extinction
/// figure per row.
pub fn extinction_graph() -> WorkflowGraph {
    let mut graph = WorkflowGraph::new("Extinction");
    for name in ["CoordinateReader", "SurveyLookup", "ColumnFilter", "ExtinctionCalc"] {
        graph
            .add_node(name, builtin_descriptor(name).expect("builtin exists"))
            .expect("fresh graph");
    }
    graph.connect("CoordinateReader", "output", "SurveyLookup", "input").expect("valid edge");
    graph.connect("SurveyLookup", "output", "ColumnFilter", "input").expect("valid edge");
    graph.connect("ColumnFilter", "output", "ExtinctionCalc", "input").expect("valid edge");
    graph
}

/// Catalog with every built-in behavior registered.
pub fn builtin_catalog() -> BehaviorCatalog {
    let mut catalog = BehaviorCatalog::new();
    catalog.register("NumberProducer", |info| Box::new(NumberProducer::new(info)));
    catalog.register("IsPrime", |_| Box::new(IsPrime));
    catalog.register("PrintPrime", |_| Box::new(PrintPrime));
    catalog.register("CountWords", |_| Box::new(CountWords::default()));
    catalog.register("CoordinateReader", |info| Box::new(CoordinateReader::new(info)));
    catalog.register("SurveyLookup", |_| Box::new(SurveyLookup));
    catalog.register("ColumnFilter", |_| Box::new(ColumnFilter));
    catalog.register("ExtinctionCalc", |_| Box::new(ExtinctionCalc));
    catalog
}

/// Uniform draw in `1..=1000` from a run-seeded generator, one per tick.
struct NumberProducer {
    rng: ChaCha8Rng,
}

impl NumberProducer {
    fn new(info: &InstanceInfo) -> Self {
        NumberProducer { rng: ChaCha8Rng::seed_from_u64(info.seed) }
    }
}

impl Behavior for NumberProducer {
    fn process(&mut self, _input: Option<Value>, ctx: &mut Context) {
        let number: i64 = self.rng.random_range(1..=1000);
        ctx.emit("output", json!(number));
    }
}

/// Primality predicate over the divisor range `2..num`: vacuously true for
/// 1 and 2, so both pass through.
pub fn passes_prime_filter(num: i64) -> bool {
    (2..num).all(|i| num % i != 0)
}

struct IsPrime;

impl Behavior for IsPrime {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        ctx.print("before checking data - is prime or not");
        let Some(num) = input.as_ref().and_then(Value::as_i64) else {
            return;
        };
        if passes_prime_filter(num) {
            ctx.emit("output", json!(num));
        }
    }
}

struct PrintPrime;

impl Behavior for PrintPrime {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        if let Some(num) = input {
            ctx.print(format!("the num {num} is prime"));
            ctx.capture(num);
        }
    }
}

/// Stateful word counter; expects `(word, count)` tuples grouped by word
/// and emits the running `(word, total)` after each update.
#[derive(Default)]
struct CountWords {
    count: HashMap<String, i64>,
}

impl Behavior for CountWords {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        let Some(Value::Array(tuple)) = input else {
            return;
        };
        let (Some(word), Some(count)) =
            (tuple.first().and_then(Value::as_str), tuple.get(1).and_then(Value::as_i64))
        else {
            return;
        };
        let total = self.count.entry(word.to_string()).or_insert(0);
        *total += count;
        ctx.emit("output", json!([word, *total]));
    }
}

/// Streams `(ra, dec)` pairs from `resources/coordinates.txt` (or the file
/// named by the `file` argument), one line per tick, nothing once drained.
struct CoordinateReader {
    file: String,
    pending: Option<VecDeque<(f64, f64)>>,
}

impl CoordinateReader {
    fn new(info: &InstanceInfo) -> Self {
        let file = info
            .args
            .get("file")
            .and_then(Value::as_str)
            .unwrap_or("coordinates.txt")
            .to_string();
        CoordinateReader { file, pending: None }
    }
}

impl Behavior for CoordinateReader {
    fn setup(&mut self, ctx: &mut Context) {
        let mut queue = VecDeque::new();
        if let Some(path) = ctx.resource_path(&self.file) {
            if let Ok(text) = std::fs::read_to_string(path) {
                for line in text.lines() {
                    let mut parts = line.split_whitespace();
                    if let (Some(ra), Some(dec)) = (parts.next(), parts.next()) {
                        if let (Ok(ra), Ok(dec)) = (ra.parse::<f64>(), dec.parse::<f64>()) {
                            queue.push_back((ra, dec));
                        }
                    }
                }
            }
        }
        self.pending = Some(queue);
    }

    fn process(&mut self, _input: Option<Value>, ctx: &mut Context) {
        if let Some(queue) = self.pending.as_mut() {
            if let Some((ra, dec)) = queue.pop_front() {
                ctx.emit("output", json!([ra, dec]));
            }
        }
    }
}

/// Synthetic catalog row for a coordinate pair: morphology type in `0..10`
/// and a diameter figure in `0.1..1.0`, both hash-derived so every process
/// sees the same table.
pub fn synthetic_survey_row(ra: f64, dec: f64) -> (i64, f64) {
    let h = stable_hash(&canonical_bytes(&json!([ra, dec])));
    let mtype = (h % 10) as i64;
    let log_r25 = 0.1 + ((h >> 8) % 900) as f64 / 1000.0;
    (mtype, log_r25)
}

struct SurveyLookup;

impl Behavior for SurveyLookup {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        let Some(Value::Array(pair)) = input else {
            return;
        };
        let (Some(ra), Some(dec)) =
            (pair.first().and_then(Value::as_f64), pair.get(1).and_then(Value::as_f64))
        else {
            return;
        };
        let (mtype, log_r25) = synthetic_survey_row(ra, dec);
        ctx.emit("output", json!([ra, dec, mtype, log_r25]));
    }
}

struct ColumnFilter;

impl Behavior for ColumnFilter {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        let Some(Value::Array(row)) = input else {
            return;
        };
        if row.len() == 4 {
            ctx.emit("output", json!([row[2], row[3]]));
        }
    }
}

/// Extinction figure for a `(mtype, log_r25)` row.
pub fn extinction_value(mtype: i64, log_r25: f64) -> f64 {
    let coefficient = 1.5 - 0.1 * mtype as f64;
    coefficient * log_r25
}

struct ExtinctionCalc;

impl Behavior for ExtinctionCalc {
    fn process(&mut self, input: Option<Value>, ctx: &mut Context) {
        let Some(Value::Array(row)) = input else {
            return;
        };
        let (Some(mtype), Some(log_r25)) =
            (row.first().and_then(Value::as_i64), row.get(1).and_then(Value::as_f64))
        else {
            return;
        };
        let extinction = extinction_value(mtype, log_r25);
        ctx.print(format!("internal extinction: {extinction}"));
        ctx.capture(json!([mtype, log_r25, extinction]));
    }
}
