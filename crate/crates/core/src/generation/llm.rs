//! Language-model clients.

use crate::transport::{JsonTransport, RetryPolicy, TransportError};
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("LLM backend: {0}")]
    Remote(#[from] TransportError),
    #[error("no scripted continuation for prompt {0}")]
    ScriptMiss(String),
    #[error("scripted replay exhausted")]
    Exhausted,
    #[error("script file {path}: {message}")]
    ScriptFile { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub stop: Vec<String>,
    /// Index of this draw when several samples are taken for one prompt.
    pub sample: usize,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64, max_tokens: usize) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            temperature,
            max_tokens,
            stop: Vec::new(),
            sample: 0,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

/// Hex SHA-256 of a prompt; the key used by scripted replay files.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Script {
    One(String),
    Many(Vec<String>),
}

impl Script {
    fn pick(&self, k: usize) -> Option<&str> {
        match self {
            Script::One(s) => Some(s),
            Script::Many(v) if v.is_empty() => None,
            Script::Many(v) => Some(&v[k % v.len()]),
        }
    }
}

/// Replays canned continuations keyed by prompt hash.
///
/// Values are a string or a list of strings; a list is indexed by the
/// request's sample number. The optional `"*"` entry answers prompts with
/// no entry of their own, choosing by prompt hash so the result is still
/// a pure function of the request.
#[derive(Debug, Clone, Default)]
pub struct ScriptedLlm {
    entries: HashMap<String, Script>,
    fallback: Option<Script>,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entry(mut self, prompt: &str, continuation: impl Into<String>) -> Self {
        self.entries
            .insert(prompt_hash(prompt), Script::One(continuation.into()));
        self
    }

    pub fn with_samples(mut self, prompt: &str, continuations: Vec<String>) -> Self {
        self.entries.insert(prompt_hash(prompt), Script::Many(continuations));
        self
    }

    pub fn with_fallback(mut self, continuations: Vec<String>) -> Self {
        self.fallback = Some(Script::Many(continuations));
        self
    }

    pub fn from_json(value: Value) -> Result<Self, String> {
        let mut map: HashMap<String, Script> =
            serde_json::from_value(value).map_err(|e| e.to_string())?;
        let fallback = map.remove("*");
        Ok(ScriptedLlm {
            entries: map,
            fallback,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let err = |message: String| LlmError::ScriptFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Self::from_json(value).map_err(err)
    }
}

impl LlmClient for ScriptedLlm {
    fn model_id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let hash = prompt_hash(&request.prompt);
        if let Some(text) = self.entries.get(&hash).and_then(|s| s.pick(request.sample)) {
            return Ok(text.to_owned());
        }
        let seed = u64::from_str_radix(&hash[..15], 16).expect("hex digest") as usize;
        self.fallback
            .as_ref()
            .and_then(|s| s.pick(seed.wrapping_add(request.sample)))
            .map(str::to_owned)
            .ok_or(LlmError::ScriptMiss(hash))
    }
}

/// Returns queued continuations in call order, regardless of prompt.
#[derive(Debug, Default)]
pub struct SequenceLlm {
    queue: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl SequenceLlm {
    pub fn new<S: Into<String>>(continuations: impl IntoIterator<Item = S>) -> Self {
        SequenceLlm {
            queue: Mutex::new(continuations.into_iter().map(Into::into).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Every prompt seen so far.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log").clone()
    }
}

impl LlmClient for SequenceLlm {
    fn model_id(&self) -> &str {
        "sequence"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.prompts
            .lock()
            .expect("prompt log")
            .push(request.prompt.clone());
        self.queue
            .lock()
            .expect("queue")
            .pop_front()
            .ok_or(LlmError::Exhausted)
    }
}

/// Completion service: `{"model","prompt","temperature","max_tokens","stop"}` -> `{"text"}`.
pub struct RemoteLlm {
    model: String,
    transport: Box<dyn JsonTransport>,
    retry: RetryPolicy,
}

impl RemoteLlm {
    pub fn new(model: impl Into<String>, transport: Box<dyn JsonTransport>) -> Self {
        RemoteLlm {
            model: model.into(),
            transport,
            retry: RetryPolicy::default(),
        }
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        json!({
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stop": request.stop,
        })
    }
}

impl LlmClient for RemoteLlm {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let body = self.request_body(request);
        let reply = self.retry.run(|| self.transport.post_json(&body))?;
        reply
            .get("text")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Decode("missing string `text`".into()).into())
    }
}
