//! Okapi BM25 over normalized whitespace tokens.

use crate::model::Passage;
use crate::normalize::normalize_text;
use std::collections::{HashMap, HashSet};

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

pub(crate) fn tokenize(s: &str) -> Vec<String> {
    normalize_text(s).split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect()
}

/// Text indexed for a passage: title followed by body.
pub(crate) fn indexed_text(p: &Passage) -> String {
    format!("{} {}", p.title, p.text)
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    term_freqs: Vec<HashMap<String, u32>>,
    doc_lens: Vec<f64>,
    avg_len: f64,
    doc_freq: HashMap<String, u32>,
}

impl Bm25Index {
    pub fn build(passages: &[Passage], params: Bm25Params) -> Self {
        let mut term_freqs = Vec::with_capacity(passages.len());
        let mut doc_lens = Vec::with_capacity(passages.len());
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        for p in passages {
            let tokens = tokenize(&indexed_text(p));
            doc_lens.push(tokens.len() as f64);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            term_freqs.push(tf);
        }
        let avg_len = if doc_lens.is_empty() {
            0.0
        } else {
            doc_lens.iter().sum::<f64>() / doc_lens.len() as f64
        };
        Bm25Index {
            params,
            term_freqs,
            doc_lens,
            avg_len,
            doc_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lens.is_empty()
    }

    /// Non-negative idf, `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every indexed passage against the distinct query terms.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let terms: HashSet<String> = tokenize(query).into_iter().collect();
        let Bm25Params { k1, b } = self.params;
        let idfs: Vec<(&String, f64)> = terms.iter().map(|t| (t, self.idf(t))).collect();
        self.term_freqs
            .iter()
            .zip(&self.doc_lens)
            .map(|(tf, &len)| {
                let norm = k1 * (1.0 - b + b * len / self.avg_len.max(f64::MIN_POSITIVE));
                idfs.iter()
                    .filter_map(|(t, idf)| {
                        let f = *tf.get(*t)? as f64;
                        Some(idf * f * (k1 + 1.0) / (f + norm))
                    })
                    .sum()
            })
            .collect()
    }
}
