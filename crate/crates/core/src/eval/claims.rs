//! Sub-claim generation for long-form answers.

use crate::generation::llm::{CompletionRequest, LlmClient, LlmError};
use crate::generation::prompt::CLAIMS_TEMPLATE;
use crate::model::ClaimSet;

pub const CLAIMS_MAX_TOKENS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum ClaimError {
    #[error("gold answer is empty")]
    EmptyAnswer,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("expected 3 claims, parsed {found}; continuation: {raw:?}")]
    Incomplete { found: usize, raw: String },
}

/// The few-shot claim prompt for one question and gold answer.
pub fn claims_prompt(question: &str, gold_answer: &str) -> String {
    CLAIMS_TEMPLATE
        .replace("{QUESTION}", question)
        .replace("{PASSAGE}", gold_answer)
}

/// Reads `Claim 1:` .. `Claim 3:` lines; other lines are ignored and the
/// first occurrence of each number wins.
pub fn parse_claims(text: &str) -> Vec<Option<String>> {
    let mut claims: Vec<Option<String>> = vec![None; 3];
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix("Claim ") else {
            continue;
        };
        let Some((num, body)) = rest.split_once(':') else {
            continue;
        };
        let body = body.trim();
        match num.trim().parse::<usize>() {
            Ok(n @ 1..=3) if claims[n - 1].is_none() && !body.is_empty() => {
                claims[n - 1] = Some(body.to_owned());
            }
            _ => {}
        }
    }
    claims
}

pub fn generate_claims(
    question: &str,
    gold_answer: &str,
    llm: &dyn LlmClient,
) -> Result<ClaimSet, ClaimError> {
    if gold_answer.trim().is_empty() {
        return Err(ClaimError::EmptyAnswer);
    }
    let request = CompletionRequest::new(claims_prompt(question, gold_answer), 0.0, CLAIMS_MAX_TOKENS);
    let raw = llm.complete(&request)?;
    // The prompt already ends with "Claim 1:".
    let text = if raw.trim_start().starts_with("Claim 1:") {
        raw.clone()
    } else {
        format!("Claim 1:{raw}")
    };
    let parsed = parse_claims(&text);
    let found = parsed.iter().flatten().count();
    if found < 3 {
        return Err(ClaimError::Incomplete { found, raw });
    }
    Ok(ClaimSet::new(parsed.into_iter().flatten().collect()).expect("three claims"))
}
