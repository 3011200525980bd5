//! Dense text-to-vector adapters and cosine reranking.

use crate::model::Passage;
use crate::normalize::normalize_text;
use crate::transport::{JsonTransport, RetryPolicy, TransportError};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding service: {0}")]
    Remote(#[from] TransportError),
    #[error("embedding service returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

/// Feature-hashing bag of normalized tokens. Deterministic and offline.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 1024 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl HashingEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f32; self.dim];
        for tok in normalize_text(text).split(' ').filter(|t| !t.is_empty()) {
            v[(fnv1a(tok.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        v
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Embedding service speaking `{"texts": [..]}` -> `{"vectors": [[..], ..]}`.
pub struct RemoteEmbedder {
    transport: Box<dyn JsonTransport>,
    retry: RetryPolicy,
}

impl RemoteEmbedder {
    pub fn new(transport: Box<dyn JsonTransport>) -> Self {
        RemoteEmbedder {
            transport,
            retry: RetryPolicy::default(),
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let body = json!({ "texts": texts });
        let reply = self.retry.run(|| self.transport.post_json(&body))?;
        let decode = |m: &str| EmbedError::Remote(TransportError::Decode(m.to_owned()));
        let vectors = reply
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| decode("missing `vectors` array"))?;
        if vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                expected: texts.len(),
                got: vectors.len(),
            });
        }
        vectors
            .iter()
            .map(|v| {
                v.as_array()
                    .ok_or_else(|| decode("vector is not an array"))?
                    .iter()
                    .map(|x| x.as_f64().map(|f| f as f32).ok_or_else(|| decode("non-numeric component")))
                    .collect()
            })
            .collect()
    }
}

/// Cosine similarity; zero vectors have similarity 0 with everything.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Candidate positions ordered by descending cosine to the query, ties by
/// original position, paired with their similarity.
pub fn similarity_order(
    query: &str,
    candidates: &[Passage],
    embedder: &dyn Embedder,
) -> Result<Vec<(usize, f64)>, EmbedError> {
    let texts: Vec<&str> = candidates.iter().map(|p| p.text.as_str()).collect();
    let vectors = embedder.embed(&texts)?;
    order_by_vectors(query, &vectors, embedder)
}

pub(crate) fn order_by_vectors(
    query: &str,
    vectors: &[Vec<f32>],
    embedder: &dyn Embedder,
) -> Result<Vec<(usize, f64)>, EmbedError> {
    let q = embedder
        .embed(&[query])?
        .pop()
        .ok_or(EmbedError::CountMismatch { expected: 1, got: 0 })?;
    let mut scored: Vec<(usize, f64)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (i, cosine(&q, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// Reorders already-retrieved candidates by similarity to `query`.
pub fn rerank_candidates(
    query: &str,
    candidates: &[Passage],
    embedder: &dyn Embedder,
) -> Result<Vec<Passage>, EmbedError> {
    Ok(similarity_order(query, candidates, embedder)?
        .into_iter()
        .map(|(i, _)| candidates[i].clone())
        .collect())
}
