//! The binary entailment judge used by citation and claim scoring.

use crate::model::Passage;
use crate::normalize::normalize_text;
use crate::transport::{JsonTransport, RetryPolicy, TransportError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("premise must contain at least one passage")]
    EmptyPremise,
    #[error("entailment inputs must be non-empty")]
    EmptyInput,
    #[error("no truth-table entry for premise {premise:?} / hypothesis {hypothesis:?}")]
    TableMiss { premise: String, hypothesis: String },
    #[error("truth table {path}: {message}")]
    TableFile { path: String, message: String },
    #[error("NLI backend: {0}")]
    Remote(#[from] TransportError),
}

/// Renders passages as `Title: {title}\n{text}`, joined by newlines.
pub fn render_premise<'a>(
    passages: impl IntoIterator<Item = &'a Passage>,
) -> Result<String, OracleError> {
    let mut premise = String::with_capacity(256);
    for p in passages {
        if !premise.is_empty() {
            premise.push('\n');
        }
        premise.push_str("Title: ");
        premise.push_str(&p.title);
        premise.push('\n');
        premise.push_str(&p.text);
    }
    if premise.is_empty() {
        return Err(OracleError::EmptyPremise);
    }
    Ok(premise)
}

/// Model input for one premise/hypothesis pair.
pub fn nli_input(premise: &str, hypothesis: &str) -> String {
    format!("premise: {premise} hypothesis: {hypothesis}")
}

/// NLI service speaking `{"inputs": [..]}` -> `{"labels": [0|1, ..]}`.
pub struct RemoteNli {
    transport: Box<dyn JsonTransport>,
    retry: RetryPolicy,
}

impl RemoteNli {
    pub fn new(transport: Box<dyn JsonTransport>) -> Self {
        RemoteNli {
            transport,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn request_body(pairs: &[(&str, &str)]) -> Value {
        let inputs: Vec<String> = pairs.iter().map(|(p, h)| nli_input(p, h)).collect();
        json!({ "inputs": inputs })
    }

    pub fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<bool>, OracleError> {
        let body = Self::request_body(pairs);
        let reply = self.retry.run(|| self.transport.post_json(&body))?;
        let labels = reply
            .get("labels")
            .and_then(Value::as_array)
            .ok_or_else(|| TransportError::Decode("missing `labels` array".into()))?;
        if labels.len() != pairs.len() {
            return Err(TransportError::Decode(format!(
                "expected {} labels, got {}",
                pairs.len(),
                labels.len()
            ))
            .into());
        }
        labels
            .iter()
            .map(|l| match l {
                Value::Bool(b) => Ok(*b),
                Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
                Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
                other => Err(TransportError::Decode(format!("label {other} is not 0 or 1")).into()),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub premise: String,
    pub hypothesis: String,
    #[serde(deserialize_with = "de_label")]
    pub label: bool,
}

fn de_label<'de, D: serde::Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    match Value::deserialize(d)? {
        Value::Bool(b) => Ok(b),
        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        other => Err(serde::de::Error::custom(format!("label {other} is not 0 or 1"))),
    }
}

/// Preloaded premise/hypothesis truth table.
#[derive(Debug, Clone, Default)]
pub struct TruthTable {
    /// Hypothesis, then premise.
    entries: BTreeMap<String, BTreeMap<String, bool>>,
}

impl TruthTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, premise: impl Into<String>, hypothesis: impl Into<String>, label: bool) {
        self.entries
            .entry(hypothesis.into())
            .or_default()
            .insert(premise.into(), label);
    }

    pub fn get(&self, premise: &str, hypothesis: &str) -> Option<bool> {
        self.entries.get(hypothesis)?.get(premise).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let err = |message: String| OracleError::TableFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let rows: Vec<TableEntry> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(rows.into_iter().collect())
    }
}

impl FromIterator<TableEntry> for TruthTable {
    fn from_iter<I: IntoIterator<Item = TableEntry>>(iter: I) -> Self {
        let mut t = TruthTable::new();
        for e in iter {
            t.insert(e.premise, e.hypothesis, e.label);
        }
        t
    }
}

pub enum OracleBackend {
    Remote(RemoteNli),
    /// Entailed iff the normalized hypothesis occurs in the normalized premise.
    Substring,
    Table(TruthTable),
}

/// Deterministic premise/hypothesis judge with an optional memo cache.
pub struct EntailmentOracle {
    backend: OracleBackend,
    cache: Option<Mutex<HashMap<(String, String), bool>>>,
    label: String,
}

impl EntailmentOracle {
    pub fn new(backend: OracleBackend, label: impl Into<String>) -> Self {
        EntailmentOracle {
            backend,
            cache: None,
            label: label.into(),
        }
    }

    pub fn substring() -> Self {
        Self::new(OracleBackend::Substring, "substring")
    }

    pub fn table(table: TruthTable) -> Self {
        Self::new(OracleBackend::Table(table), "table")
    }

    pub fn remote(nli: RemoteNli) -> Self {
        let label = format!("remote:{}", nli.transport.describe());
        Self::new(OracleBackend::Remote(nli), label)
    }

    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self
    }

    /// Identifies the backend in reports.
    pub fn describe(&self) -> &str {
        &self.label
    }

    pub fn entails(&self, premise: &str, hypothesis: &str) -> Result<bool, OracleError> {
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(OracleError::EmptyInput);
        }
        if let Some(cache) = &self.cache {
            let key = (premise.to_owned(), hypothesis.to_owned());
            if let Some(&hit) = cache.lock().expect("cache lock").get(&key) {
                return Ok(hit);
            }
            let value = self.judge(premise, hypothesis)?;
            cache.lock().expect("cache lock").insert(key, value);
            return Ok(value);
        }
        self.judge(premise, hypothesis)
    }

    fn judge(&self, premise: &str, hypothesis: &str) -> Result<bool, OracleError> {
        match &self.backend {
            OracleBackend::Substring => {
                Ok(normalize_text(premise).contains(&normalize_text(hypothesis)))
            }
            OracleBackend::Table(t) => {
                t.get(premise, hypothesis)
                    .ok_or_else(|| OracleError::TableMiss {
                        premise: premise.to_owned(),
                        hypothesis: hypothesis.to_owned(),
                    })
            }
            OracleBackend::Remote(nli) => Ok(nli.classify(&[(premise, hypothesis)])?[0]),
        }
    }
}
