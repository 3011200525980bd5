use super::llm::{CompletionRequest, LlmClient};
use super::prompt::{compression_prompt, SNIPPET_TEMPLATE, SUMMARY_TEMPLATE};
use super::GenerationError;
use crate::model::{CompressionMode, Passage};

pub const COMPRESSION_MAX_TOKENS: usize = 150;

/// A passage that survived compression, with its shortened text.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedDoc {
    pub passage: Passage,
    pub compressed: String,
}

impl CompressedDoc {
    /// The passage with its text replaced by the compressed version.
    pub fn as_passage(&self) -> Passage {
        Passage {
            text: self.compressed.clone(),
            ..self.passage.clone()
        }
    }
}

/// Summarizes or extracts a span from `passage`. Returns `None` when the
/// model declares the passage irrelevant (or says nothing at all).
pub fn compress_passage(
    passage: &Passage,
    question: &str,
    mode: CompressionMode,
    llm: &dyn LlmClient,
) -> Result<Option<String>, GenerationError> {
    let template = match mode {
        CompressionMode::Summary => SUMMARY_TEMPLATE,
        CompressionMode::Snippet => SNIPPET_TEMPLATE,
    };
    let request = CompletionRequest::new(
        compression_prompt(template, question, passage),
        0.0,
        COMPRESSION_MAX_TOKENS,
    );
    let reply = llm.complete(&request)?;
    let reply = reply.trim();
    if reply.is_empty() || reply.to_lowercase().starts_with("irrelevant") {
        return Ok(None);
    }
    Ok(Some(reply.to_owned()))
}

/// Compresses each passage in order, dropping the irrelevant ones.
pub fn compress_all(
    passages: &[Passage],
    question: &str,
    mode: CompressionMode,
    llm: &dyn LlmClient,
) -> Result<Vec<CompressedDoc>, GenerationError> {
    let mut out = Vec::with_capacity(passages.len());
    for p in passages {
        match compress_passage(p, question, mode, llm)? {
            Some(compressed) => out.push(CompressedDoc {
                passage: p.clone(),
                compressed,
            }),
            None => log::debug!("passage {} filtered as irrelevant", p.id),
        }
    }
    Ok(out)
}
