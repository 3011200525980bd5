//! Fluency: text preparation plus a pluggable MAUVE backend.

use crate::transport::{JsonTransport, RetryPolicy, TransportError};
use serde_json::{json, Value};
use std::collections::HashSet;

pub const FLUENCY_WORD_LIMIT: usize = 100;

/// `question + " " + answer`, cut to the first 100 whitespace-delimited words.
pub fn fluency_preprocess(question: &str, answer: &str) -> String {
    format!("{question} {answer}")
        .split_whitespace()
        .take(FLUENCY_WORD_LIMIT)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, thiserror::Error)]
pub enum FluencyError {
    #[error("MAUVE backend: {0}")]
    Remote(#[from] TransportError),
    #[error("need at least two distinct texts on each side")]
    TooFewTexts,
}

pub trait FluencyBackend: Send + Sync {
    /// Distribution similarity of model texts to human texts, 0-100.
    fn score(&self, human: &[String], model: &[String]) -> Result<f64, FluencyError>;
}

/// Returns a fixed score; for pipeline tests.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFluency(pub f64);

impl FluencyBackend for ConstantFluency {
    fn score(&self, _human: &[String], _model: &[String]) -> Result<f64, FluencyError> {
        Ok(self.0)
    }
}

/// MAUVE service: `{"p_texts": human, "q_texts": model}` -> `{"mauve": 0..1}`.
pub struct RemoteMauve {
    transport: Box<dyn JsonTransport>,
    retry: RetryPolicy,
}

impl RemoteMauve {
    pub fn new(transport: Box<dyn JsonTransport>) -> Self {
        RemoteMauve {
            transport,
            retry: RetryPolicy::default(),
        }
    }

    pub fn request_body(human: &[String], model: &[String]) -> Value {
        json!({ "p_texts": human, "q_texts": model })
    }
}

impl FluencyBackend for RemoteMauve {
    fn score(&self, human: &[String], model: &[String]) -> Result<f64, FluencyError> {
        let body = Self::request_body(human, model);
        let reply = self.retry.run(|| self.transport.post_json(&body))?;
        let mauve = reply
            .get("mauve")
            .and_then(Value::as_f64)
            .ok_or_else(|| TransportError::Decode("missing numeric `mauve`".into()))?;
        Ok(mauve * 100.0)
    }
}

/// Scores preprocessed `(human, model)` pairs. Any failure is logged and
/// reported as `None` so the rest of the evaluation can proceed.
pub fn fluency_score(pairs: &[(String, String)], backend: &dyn FluencyBackend) -> Option<f64> {
    let (human, model): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
    let distinct = |v: &[String]| v.iter().collect::<HashSet<_>>().len();
    if distinct(&human) < 2 || distinct(&model) < 2 {
        log::warn!("fluency skipped: {}", FluencyError::TooFewTexts);
        return None;
    }
    match backend.score(&human, &model) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("fluency unavailable: {e}");
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn truncates_to_hundred_words() {
        let answer = vec!["w"; 150].join(" ");
        let out = fluency_preprocess("why now", &answer);
        assert_eq!(out.split(' ').count(), 100);
        assert!(out.starts_with("why now w w"));
        assert_eq!(fluency_preprocess("just a question?", ""), "just a question?");
    }

    #[test]
    fn stub_passthrough_and_guard() {
        let pairs = vec![("a".to_string(), "x".to_string()), ("b".to_string(), "y".to_string())];
        assert_eq!(fluency_score(&pairs, &ConstantFluency(42.5)), Some(42.5));
        let same = vec![("a".to_string(), "x".to_string()), ("a".to_string(), "x".to_string())];
        assert_eq!(fluency_score(&same, &ConstantFluency(42.5)), None);
    }

    proptest! {
        #[test]
        fn never_more_than_hundred_words(q in "\\PC{0,200}", a in "\\PC{0,800}") {
            prop_assert!(fluency_preprocess(&q, &a).split_whitespace().count() <= FLUENCY_WORD_LIMIT);
        }
    }
}
