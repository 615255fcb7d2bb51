//! Text, semantic, and code-completion search over registered components.
//!
//! Semantic and code searches follow the bi-encoder shape: corpus
//! embeddings are computed once at registration and stored; a query is
//! embedded at search time and ranked by cosine similarity against the
//! stored vectors. Which encoder produces the vectors is behind
//! [`EmbeddingProvider`]; the deterministic fallback keeps everything
//! testable without model weights.

mod provider;

pub use provider::{fallback_embed, FallbackProvider, HttpProvider, FALLBACK_DIM};

use crate::dataflow::PEDescriptor;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid search scope `{0}`")]
    InvalidScope(String),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
}

/// Fixed-dimension real vector, unit-normalized or all-zero (the empty
/// input sentinel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Normalizes `values` to unit L2 norm; an all-zero input stays zero.
    pub fn unit_or_zero(values: Vec<f32>) -> Self {
        let norm = values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Embedding { values: vec![0.0; values.len()] };
        }
        Embedding { values: values.iter().map(|&v| (f64::from(v) / norm) as f32).collect() }
    }

    pub fn zero(dim: usize) -> Self {
        Embedding { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Cosine similarity. Defined as 0 when either vector is all-zero.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, SearchError> {
    if a.dim() != b.dim() {
        return Err(SearchError::DimMismatch(a.dim(), b.dim()));
    }
    let mut dot = 0.0f64;
    let mut norm_a = 0.0f64;
    let mut norm_b = 0.0f64;
    for (&x, &y) in a.values.iter().zip(&b.values) {
        dot += f64::from(x) * f64::from(y);
        norm_a += f64::from(x) * f64::from(x);
        norm_b += f64::from(y) * f64::from(y);
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Embedding/summarization backend. Implementations must be deterministic
/// for a fixed configuration and must surface failures as
/// [`SearchError::ProviderUnavailable`], never as silent zero vectors.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable tag identifying the provider configuration.
    fn identity(&self) -> &str;
    fn desc_embed(&self, text: &str) -> Result<Embedding, SearchError>;
    fn code_embed(&self, source: &str) -> Result<Embedding, SearchError>;
    /// `Ok(None)` means the provider has no summary and the synthesized
    /// fallback applies; `Err` means a configured provider failed.
    fn summarize(&self, source: &str) -> Result<Option<String>, SearchError>;
}

/// What a search request ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchScope {
    Pe,
    Workflow,
    Both,
}

impl SearchScope {
    pub fn parse(scope: &str) -> Result<Self, SearchError> {
        match scope {
            "pe" => Ok(SearchScope::Pe),
            "workflow" => Ok(SearchScope::Workflow),
            "both" => Ok(SearchScope::Both),
            other => Err(SearchError::InvalidScope(other.into())),
        }
    }

    pub fn includes_pes(&self) -> bool {
        matches!(self, SearchScope::Pe | SearchScope::Both)
    }

    pub fn includes_workflows(&self) -> bool {
        matches!(self, SearchScope::Workflow | SearchScope::Both)
    }
}

/// Record kind in a search result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HitKind {
    #[serde(rename = "pe")]
    Pe,
    #[serde(rename = "workflow")]
    Workflow,
}

/// One searchable record, borrowed from the caller's associated records.
#[derive(Debug, Clone)]
pub struct RecordView<'a> {
    pub kind: HitKind,
    pub id: u64,
    pub name: &'a str,
    pub description: &'a str,
    pub desc_embedding: Option<&'a Embedding>,
    pub code_embedding: Option<&'a Embedding>,
}

/// A scored search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub kind: HitKind,
    pub id: u64,
    pub name: String,
    pub description: String,
    pub score: f64,
}

impl SearchHit {
    fn from_view(view: &RecordView<'_>, score: f64) -> Self {
        SearchHit {
            kind: view.kind,
            id: view.id,
            name: view.name.to_string(),
            description: view.description.to_string(),
            score,
        }
    }
}

/// Substring match over normalized names and descriptions. Hits carry a
/// match score of 1.0 and come back ordered by id (PEs before workflows
/// on id ties).
pub fn text_search(
    records: &[RecordView<'_>],
    query: &str,
    scope: SearchScope,
) -> Vec<SearchHit> {
    let needle = normalize_text(query);
    let mut hits: Vec<SearchHit> = records
        .iter()
        .filter(|view| match view.kind {
            HitKind::Pe => scope.includes_pes(),
            HitKind::Workflow => scope.includes_workflows(),
        })
        .filter(|view| {
            normalize_text(view.name).contains(&needle)
                || normalize_text(view.description).contains(&needle)
        })
        .map(|view| SearchHit::from_view(view, 1.0))
        .collect();
    hits.sort_by(|a, b| a.id.cmp(&b.id).then(a.kind.cmp(&b.kind)));
    hits
}

/// Ranks the caller's PEs by cosine similarity between the query's
/// description embedding and each stored description embedding. Stored
/// embeddings are never recomputed.
pub fn semantic_search(
    records: &[RecordView<'_>],
    provider: &dyn EmbeddingProvider,
    query: &str,
) -> Result<Vec<SearchHit>, SearchError> {
    let query_embedding = provider.desc_embed(query)?;
    rank_by_similarity(records, &query_embedding, |view| view.desc_embedding)
}

/// Ranks the caller's PEs by cosine similarity between a code snippet's
/// embedding and each stored code embedding.
pub fn code_completion_search(
    records: &[RecordView<'_>],
    provider: &dyn EmbeddingProvider,
    snippet: &str,
) -> Result<Vec<SearchHit>, SearchError> {
    let query_embedding = provider.code_embed(snippet)?;
    rank_by_similarity(records, &query_embedding, |view| view.code_embedding)
}

fn rank_by_similarity<'a>(
    records: &[RecordView<'a>],
    query: &Embedding,
    field: impl Fn(&RecordView<'a>) -> Option<&'a Embedding>,
) -> Result<Vec<SearchHit>, SearchError> {
    let mut hits = Vec::new();
    for view in records.iter().filter(|v| v.kind == HitKind::Pe) {
        let Some(stored) = field(view) else {
            continue;
        };
        let score = cosine(query, stored)?;
        hits.push(SearchHit::from_view(view, score));
    }
    // Descending score, ascending id on ties.
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    Ok(hits)
}

/// Description for a PE: the provider's summary when it has one, otherwise
/// the synthesized port template. Never fails for the fallback provider.
pub fn summarize(
    provider: &dyn EmbeddingProvider,
    source: &str,
    descriptor: &PEDescriptor,
) -> Result<String, SearchError> {
    match provider.summarize(source)? {
        Some(summary) if !summary.trim().is_empty() => Ok(summary),
        _ => Ok(synthesized_summary(descriptor)),
    }
}

/// Template description built from the descriptor alone.
pub fn synthesized_summary(descriptor: &PEDescriptor) -> String {
    let inputs: Vec<&str> =
        descriptor.inputs().iter().map(|i| i.port.name.as_str()).collect();
    let outputs: Vec<&str> = descriptor.outputs().iter().map(|o| o.name.as_str()).collect();
    format!(
        "PE {} ({}) with inputs [{}] and outputs [{}]",
        descriptor.name(),
        descriptor.kind().as_str(),
        inputs.join(", "),
        outputs.join(", ")
    )
}

/// First plain comment line of a source payload, if any. Directive lines
/// (`#@...`) and shebangs are not summaries.
pub fn first_comment_line(source: &str) -> Option<String> {
    for line in source.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if rest.starts_with('@') || rest.starts_with('!') {
                continue;
            }
            let comment = rest.trim();
            if !comment.is_empty() {
                return Some(comment.to_string());
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("IsPrime "), "isprime");
        assert_eq!(normalize_text("A  PE"), "a pe");
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_fixed_points() {
        let v = Embedding::unit_or_zero(vec![3.0, 4.0]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-9);

        let x = Embedding::unit_or_zero(vec![1.0, 0.0]);
        let y = Embedding::unit_or_zero(vec![0.0, 1.0]);
        assert_eq!(cosine(&x, &y).unwrap(), 0.0);

        // Pinned five-digit expectation for the 45-degree case.
        let diag = Embedding::unit_or_zero(vec![1.0, 1.0]);
        assert!((cosine(&diag, &x).unwrap() - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn cosine_zero_vector_is_zero() {
        let z = Embedding::zero(4);
        let v = Embedding::unit_or_zero(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(cosine(&z, &v).unwrap(), 0.0);
    }

    #[test]
    fn cosine_dim_mismatch() {
        let a = Embedding::zero(2);
        let b = Embedding::zero(3);
        assert_eq!(cosine(&a, &b), Err(SearchError::DimMismatch(2, 3)));
    }

    #[test]
    fn scope_parsing() {
        assert_eq!(SearchScope::parse("pe").unwrap(), SearchScope::Pe);
        assert_eq!(SearchScope::parse("both").unwrap(), SearchScope::Both);
        assert_eq!(
            SearchScope::parse("x"),
            Err(SearchError::InvalidScope("x".into()))
        );
    }

    fn view<'a>(kind: HitKind, id: u64, name: &'a str, description: &'a str) -> RecordView<'a> {
        RecordView { kind, id, name, description, desc_embedding: None, code_embedding: None }
    }

    #[test]
    fn text_search_partial_and_case_insensitive() {
        let records = vec![
            view(HitKind::Workflow, 1, "WordCount", "counts words"),
            view(HitKind::Workflow, 2, "isPrime", "Workflow that prints random prime numbers"),
            view(HitKind::Pe, 3, "IsPrime", "checks primality"),
        ];
        let hits = text_search(&records, "prime", SearchScope::Workflow);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].name, "isPrime");
        assert_eq!(hits[0].id, 2);

        let upper = text_search(&records, "PRIME", SearchScope::Workflow);
        assert_eq!(upper, hits);

        assert!(text_search(&records, "zzz", SearchScope::Both).is_empty());
    }

    #[test]
    fn synthesized_template_shape() {
        let d = PEDescriptor::generic(
            "X",
            vec![("input".into(), crate::dataflow::GroupingSpec::Shuffle)],
            vec!["output".into()],
        )
        .unwrap();
        assert_eq!(
            synthesized_summary(&d),
            "PE X (Generic) with inputs [input] and outputs [output]"
        );
    }

    #[test]
    fn comment_line_extraction() {
        let src = "#@pe Thing Producer\nimport os\n# Generate a random number\nx = 1\n";
        assert_eq!(first_comment_line(src), Some("Generate a random number".into()));
        assert_eq!(first_comment_line("x = 1\n"), None);
    }

    proptest! {
        // |cos| <= 1 + eps and symmetry.
        #[test]
        fn cosine_bounds_and_symmetry(
            a in proptest::collection::vec(-10.0f32..10.0, 8),
            b in proptest::collection::vec(-10.0f32..10.0, 8),
        ) {
            let ea = Embedding::unit_or_zero(a);
            let eb = Embedding::unit_or_zero(b);
            let ab = cosine(&ea, &eb).unwrap();
            let ba = cosine(&eb, &ea).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab.abs() <= 1.0 + 1e-9);
        }

        // Queries whose normal form contains another query's normal form
        // can only shrink the hit set.
        #[test]
        fn text_search_monotonicity(base in "[a-z ]{1,6}", extra in "[a-z]{0,4}") {
            let names = ["alpha beta", "beta gamma", "prime numbers", "alphabet soup"];
            let records: Vec<RecordView<'_>> = names
                .iter()
                .enumerate()
                .map(|(i, name)| view(HitKind::Pe, i as u64, name, ""))
                .collect();
            let longer = format!("{base}{extra}");
            let hits_long = text_search(&records, &longer, SearchScope::Both);
            let hits_base = text_search(&records, &base, SearchScope::Both);
            // normalize(longer) contains normalize(base) only when no space
            // trickery applies; guard by construction: base has no trailing space.
            if normalize_text(&longer).contains(&normalize_text(&base)) {
                for hit in &hits_long {
                    prop_assert!(hits_base.iter().any(|h| h.id == hit.id));
                }
            }
        }
    }
}
