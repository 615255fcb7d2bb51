//! Embedding providers: the deterministic fallback and the HTTP client for
//! an external encoder service.

use super::{first_comment_line, Embedding, EmbeddingProvider, SearchError};
use crate::hash::stable_hash;
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Default dimension of the fallback embedder.
pub const FALLBACK_DIM: usize = 256;

/// Deterministic token-bucket embedding: tokens split on non-alphanumeric
/// boundaries, lowercased, hashed into `dim` buckets, counts accumulated
/// and L2-normalized. An empty token set yields the zero vector.
pub fn fallback_embed(text: &str, dim: usize) -> Embedding {
    let mut counts = vec![0.0f32; dim];
    let mut any = false;
    for token in tokenize(text) {
        let bucket = (stable_hash(token.as_bytes()) % dim as u64) as usize;
        counts[bucket] += 1.0;
        any = true;
    }
    if !any {
        return Embedding::zero(dim);
    }
    Embedding::unit_or_zero(counts)
}

fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Deterministic stand-in for neural encoders: bucket embeddings for both
/// description and code text, first-comment-line summaries.
#[derive(Debug, Clone)]
pub struct FallbackProvider {
    dim: usize,
}

impl FallbackProvider {
    pub fn new() -> Self {
        FallbackProvider { dim: FALLBACK_DIM }
    }

    pub fn with_dim(dim: usize) -> Self {
        FallbackProvider { dim }
    }
}

impl Default for FallbackProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl EmbeddingProvider for FallbackProvider {
    fn identity(&self) -> &str {
        "fallback"
    }

    fn desc_embed(&self, text: &str) -> Result<Embedding, SearchError> {
        Ok(fallback_embed(text, self.dim))
    }

    fn code_embed(&self, source: &str) -> Result<Embedding, SearchError> {
        Ok(fallback_embed(source, self.dim))
    }

    fn summarize(&self, source: &str) -> Result<Option<String>, SearchError> {
        Ok(first_comment_line(source))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    kind: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    values: Vec<f32>,
}

#[derive(Serialize)]
struct SummarizeRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct SummarizeResponse {
    summary: String,
}

/// Client for an external embedding/summarization service speaking
/// `POST /embed` and `POST /summarize`. Timeouts and non-2xx responses
/// surface as `ProviderUnavailable`.
pub struct HttpProvider {
    base_url: String,
    identity: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        let base_url = base_url.into().trim_end_matches('/').to_string();
        let identity = format!("http:{base_url}");
        let client = reqwest::blocking::Client::builder()
            .connect_timeout(Duration::from_secs(2))
            .timeout(Duration::from_secs(15))
            .build()
            .expect("client construction cannot fail with static options");
        HttpProvider { base_url, identity, client }
    }

    fn embed(&self, kind: &str, text: &str) -> Result<Embedding, SearchError> {
        let response = self
            .client
            .post(format!("{}/embed", self.base_url))
            .json(&EmbedRequest { kind, text })
            .send()
            .map_err(|e| SearchError::ProviderUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SearchError::ProviderUnavailable(format!(
                "embed returned {}",
                response.status()
            )));
        }
        let body: EmbedResponse = response
            .json()
            .map_err(|e| SearchError::ProviderUnavailable(e.to_string()))?;
        if body.dim != body.values.len() || body.values.iter().any(|v| !v.is_finite()) {
            return Err(SearchError::ProviderUnavailable(
                "embed response is inconsistent".into(),
            ));
        }
        Ok(Embedding::unit_or_zero(body.values))
    }
}

impl EmbeddingProvider for HttpProvider {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn desc_embed(&self, text: &str) -> Result<Embedding, SearchError> {
        self.embed("desc", text)
    }

    fn code_embed(&self, source: &str) -> Result<Embedding, SearchError> {
        self.embed("code", source)
    }

    fn summarize(&self, source: &str) -> Result<Option<String>, SearchError> {
        let response = self
            .client
            .post(format!("{}/summarize", self.base_url))
            .json(&SummarizeRequest { text: source })
            .send()
            .map_err(|e| SearchError::ProviderUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SearchError::ProviderUnavailable(format!(
                "summarize returned {}",
                response.status()
            )));
        }
        let body: SummarizeResponse = response
            .json()
            .map_err(|e| SearchError::ProviderUnavailable(e.to_string()))?;
        Ok(Some(body.summary))
    }
}
