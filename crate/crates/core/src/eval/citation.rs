//! Citation recall and precision.
//!
//! A statement has recall 1 when it cites something and the concatenation
//! of everything it cites entails it. A citation scores precision 1 when
//! its statement has recall 1 and the citation is not irrelevant, where
//! irrelevant means it does not entail the statement on its own while the
//! statement's other citations still entail it without it.

use super::EvalError;
use crate::model::{ParsedResponse, Passage, Statement};
use crate::oracle::{render_premise, EntailmentOracle};

#[derive(Debug, Clone, PartialEq)]
pub struct CitationScores {
    pub recall: f64,
    pub precision: f64,
    /// Per statement, whether its citations jointly entail it.
    pub statement_recall: Vec<bool>,
    /// Per statement, per citation precision bit.
    pub citation_precision: Vec<Vec<bool>>,
}

impl CitationScores {
    pub fn n_statements(&self) -> usize {
        self.statement_recall.len()
    }

    pub fn n_citations(&self) -> usize {
        self.citation_precision.iter().map(Vec::len).sum()
    }
}

fn cited<'a>(
    statement_index: usize,
    statement: &Statement,
    passages: &'a [Passage],
    skip: Option<usize>,
) -> Result<Vec<&'a Passage>, EvalError> {
    statement
        .citations
        .iter()
        .filter(|&&c| Some(c) != skip)
        .map(|&c| {
            c.checked_sub(1)
                .and_then(|i| passages.get(i))
                .ok_or(EvalError::InvalidCitation {
                    statement: statement_index,
                    index: c,
                    passages: passages.len(),
                })
        })
        .collect()
}

fn supports(all: &[&Passage], s: &Statement, oracle: &EntailmentOracle) -> Result<bool, EvalError> {
    if all.is_empty() {
        return Ok(false);
    }
    Ok(oracle.entails(&render_premise(all.iter().copied())?, &s.text)?)
}

pub fn citation_scores(
    parsed: &ParsedResponse,
    passages: &[Passage],
    oracle: &EntailmentOracle,
) -> Result<CitationScores, EvalError> {
    let mut statement_recall = Vec::with_capacity(parsed.statements.len());
    let mut citation_precision = Vec::with_capacity(parsed.statements.len());

    for (i, s) in parsed.statements.iter().enumerate() {
        let all = cited(i, s, passages, None)?;
        let supported = supports(&all, s, oracle)?;
        if all.is_empty() {
            statement_recall.push(false);
            citation_precision.push(Vec::new());
            continue;
        }
        statement_recall.push(supported);

        let mut bits = Vec::with_capacity(s.citations.len());
        for (j, &c) in s.citations.iter().enumerate() {
            if !supported {
                bits.push(false);
                continue;
            }
            if oracle.entails(&render_premise([all[j]])?, &s.text)? {
                bits.push(true);
                continue;
            }
            // Joint support holds but this citation alone does not, so at
            // least one other citation exists.
            let rest = cited(i, s, passages, Some(c))?;
            let rest_supports = oracle.entails(&render_premise(rest)?, &s.text)?;
            bits.push(!rest_supports);
        }
        citation_precision.push(bits);
    }

    let n_statements = statement_recall.len();
    let n_citations: usize = citation_precision.iter().map(Vec::len).sum();
    let recall = if n_statements == 0 {
        0.0
    } else {
        statement_recall.iter().filter(|&&b| b).count() as f64 / n_statements as f64
    };
    let precision = if n_citations == 0 {
        0.0
    } else {
        citation_precision.iter().flatten().filter(|&&b| b).count() as f64 / n_citations as f64
    };
    Ok(CitationScores {
        recall,
        precision,
        statement_recall,
        citation_precision,
    })
}

/// Recall alone, without the extra judgments precision needs.
pub fn citation_recall(
    parsed: &ParsedResponse,
    passages: &[Passage],
    oracle: &EntailmentOracle,
) -> Result<f64, EvalError> {
    if parsed.statements.is_empty() {
        return Ok(0.0);
    }
    let mut supported = 0usize;
    for (i, s) in parsed.statements.iter().enumerate() {
        if supports(&cited(i, s, passages, None)?, s, oracle)? {
            supported += 1;
        }
    }
    Ok(supported as f64 / parsed.statements.len() as f64)
}

pub fn citation_precision(
    parsed: &ParsedResponse,
    passages: &[Passage],
    oracle: &EntailmentOracle,
) -> Result<f64, EvalError> {
    Ok(citation_scores(parsed, passages, oracle)?.precision)
}
