use citeval::dataset::DataError;
use citeval::eval::{ClaimError, EvalError};
use citeval::generation::{GenerationError, LlmError};
use citeval::oracle::OracleError;
use citeval::retrieval::{EmbedError, RetrievalError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("data: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Embed(e) => e.into(),
            RetrievalError::ZeroK => CliError::Config(e.to_string()),
            RetrievalError::Oracle(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Remote(_) => CliError::Backend(e.to_string()),
            OracleError::TableFile { .. } => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::ScriptFile { .. } => CliError::Config(e.to_string()),
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Config(_) | GenerationError::Prompt(_) => CliError::Config(e.to_string()),
            GenerationError::TooFewPassages { .. } => CliError::Data(e.to_string()),
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Oracle(e) => e.into(),
            EvalError::ConfigMismatch(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ClaimError> for CliError {
    fn from(e: ClaimError) -> Self {
        match e {
            ClaimError::Llm(e) => e.into(),
            ClaimError::EmptyAnswer => CliError::Data(e.to_string()),
            other => CliError::Backend(other.to_string()),
        }
    }
}
