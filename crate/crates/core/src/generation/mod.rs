//! Prompting strategies over an abstract language model.

pub mod compress;
pub mod interactive;
pub mod llm;
pub mod prompt;
pub mod runner;

pub use compress::{compress_passage, CompressedDoc};
pub use interactive::{run_inline_search, run_interact, Action, ActionStep, ActionTrace};
pub use llm::{prompt_hash, CompletionRequest, LlmClient, LlmError, RemoteLlm, ScriptedLlm, SequenceLlm};
pub use prompt::{build_prompt, sample_demonstrations, Demonstration, TEMPLATE_VERSION};
pub use runner::{
    generate_example, generate_run, run_closedbook, run_vanilla, Backends, GenerationRecord,
    GenerationRun, RunFailure,
};

use crate::oracle::OracleError;
use crate::retrieval::dense::EmbedError;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("prompt construction: {0}")]
    Prompt(String),
    #[error("instance {id} has {have} retrieved passages, {needed} needed")]
    TooFewPassages { id: String, needed: usize, have: usize },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("embedding: {0}")]
    Embed(#[from] EmbedError),
    #[error("rerank oracle: {0}")]
    Oracle(#[from] OracleError),
}

impl GenerationError {
    /// True for failures of an external service rather than of the inputs.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            GenerationError::Llm(_) | GenerationError::Embed(_) | GenerationError::Oracle(_)
        )
    }
}
