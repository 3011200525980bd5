//! Builds service clients from flag values and environment variables.

use crate::error::CliError;
use citeval::eval::{ConstantFluency, FluencyBackend, RemoteMauve};
use citeval::generation::{LlmClient, RemoteLlm, ScriptedLlm};
use citeval::oracle::{EntailmentOracle, RemoteNli, TruthTable};
use citeval::retrieval::{Embedder, HashingEmbedder, RemoteEmbedder};
use citeval::transport::HttpTransport;
use std::path::Path;
use std::sync::Arc;

pub const LLM_ENDPOINT: &str = "LLM_ENDPOINT";
pub const LLM_API_KEY: &str = "LLM_API_KEY";
pub const NLI_ENDPOINT: &str = "NLI_ENDPOINT";
pub const EMBED_ENDPOINT: &str = "EMBED_ENDPOINT";
pub const MAUVE_ENDPOINT: &str = "MAUVE_ENDPOINT";

fn endpoint(var: &str) -> Result<HttpTransport, CliError> {
    let url = std::env::var(var)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| CliError::Config(format!("{var} is not set")))?;
    HttpTransport::new(url).map_err(|e| CliError::Backend(e.to_string()))
}

pub fn llm(spec: &str, model: &str) -> Result<Box<dyn LlmClient>, CliError> {
    if spec == "remote" {
        let transport = endpoint(LLM_ENDPOINT)?.with_bearer(std::env::var(LLM_API_KEY).ok());
        return Ok(Box::new(RemoteLlm::new(model, Box::new(transport))));
    }
    if let Some(path) = spec.strip_prefix("scripted:") {
        return Ok(Box::new(ScriptedLlm::load(Path::new(path))?));
    }
    Err(CliError::Config(format!("unknown --llm `{spec}`; use remote or scripted:PATH")))
}

pub fn oracle(spec: &str) -> Result<EntailmentOracle, CliError> {
    let oracle = match spec {
        "remote" => EntailmentOracle::remote(RemoteNli::new(Box::new(endpoint(NLI_ENDPOINT)?))),
        "substring" => EntailmentOracle::substring(),
        _ => match spec.strip_prefix("table:") {
            Some(path) => EntailmentOracle::table(TruthTable::load(Path::new(path))?),
            None => {
                return Err(CliError::Config(format!(
                    "unknown --oracle `{spec}`; use remote, substring or table:PATH"
                )))
            }
        },
    };
    Ok(oracle.with_cache())
}

pub fn embedder(spec: &str) -> Result<Arc<dyn Embedder>, CliError> {
    match spec {
        "hash" => Ok(Arc::new(HashingEmbedder::default())),
        "remote" | "dense" => Ok(Arc::new(RemoteEmbedder::new(Box::new(endpoint(EMBED_ENDPOINT)?)))),
        _ => Err(CliError::Config(format!("unknown embedder `{spec}`; use hash or remote"))),
    }
}

pub fn fluency(spec: &str) -> Result<Option<Box<dyn FluencyBackend>>, CliError> {
    let remote = || -> Result<Option<Box<dyn FluencyBackend>>, CliError> {
        Ok(Some(Box::new(RemoteMauve::new(Box::new(endpoint(MAUVE_ENDPOINT)?)))))
    };
    match spec {
        "none" => Ok(None),
        "remote" => remote(),
        "auto" if std::env::var(MAUVE_ENDPOINT).is_ok_and(|v| !v.trim().is_empty()) => remote(),
        "auto" => {
            log::warn!("{MAUVE_ENDPOINT} is not set; fluency will not be reported");
            Ok(None)
        }
        _ => match spec.strip_prefix("constant:").map(str::parse::<f64>) {
            Some(Ok(v)) => Ok(Some(Box::new(ConstantFluency(v)))),
            _ => Err(CliError::Config(format!(
                "unknown --fluency `{spec}`; use auto, none, remote or constant:VALUE"
            ))),
        },
    }
}
