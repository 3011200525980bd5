//! Dataset-specific correctness metrics.

use crate::model::{AliasSet, AsqaGold, ClaimSet, ParsedResponse, QampariGold};
use crate::normalize::normalize_text;
use crate::oracle::{EntailmentOracle, OracleError};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Number of alias sets with at least one normalized alias occurring as a
/// substring of the normalized text. Aliases that normalize to nothing never match.
pub fn alias_coverage(text: &str, sets: &[AliasSet]) -> usize {
    let haystack = normalize_text(text);
    sets.iter()
        .filter(|aliases| {
            aliases.iter().any(|a| {
                let a = normalize_text(a);
                !a.is_empty() && haystack.contains(&a)
            })
        })
        .count()
}

/// Fraction of ASQA short-answer sets found in the output.
pub fn em_recall_asqa(output: &str, gold: &AsqaGold) -> f64 {
    if gold.qa_pairs.is_empty() {
        return 0.0;
    }
    alias_coverage(output, &gold.qa_pairs) as f64 / gold.qa_pairs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QampariScores {
    pub precision: f64,
    pub recall: f64,
    pub recall_5: f64,
}

/// Exact-match precision/recall of predicted entities. Predictions are
/// normalized and deduplicated; each gold set can be matched once.
pub fn qampari_scores(parsed: &ParsedResponse, gold: &QampariGold) -> QampariScores {
    let mut seen = HashSet::new();
    let predictions: Vec<String> = parsed
        .statements
        .iter()
        .map(|s| normalize_text(&s.text))
        .filter(|p| !p.is_empty() && seen.insert(p.clone()))
        .collect();

    let gold_norm: Vec<Vec<String>> = gold
        .answer_sets
        .iter()
        .map(|set| set.iter().map(|a| normalize_text(a)).collect())
        .collect();
    let mut matched = vec![false; gold_norm.len()];
    let mut correct = 0usize;
    for p in &predictions {
        if let Some(g) = (0..gold_norm.len()).find(|&g| !matched[g] && gold_norm[g].contains(p)) {
            matched[g] = true;
            correct += 1;
        }
    }

    let n_gold = gold_norm.len();
    let hits = matched.iter().filter(|&&m| m).count();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    QampariScores {
        precision: ratio(correct, predictions.len()),
        recall: ratio(hits, n_gold),
        recall_5: ratio(hits.min(5), n_gold.min(5)),
    }
}

/// Mean entailment of the three sub-claims, with the output as premise.
pub fn claim_recall_eli5(
    output: &str,
    claims: &ClaimSet,
    oracle: &EntailmentOracle,
) -> Result<f64, OracleError> {
    if output.trim().is_empty() {
        return Ok(0.0);
    }
    let mut hit = 0usize;
    for claim in claims.claims() {
        if oracle.entails(output, claim)? {
            hit += 1;
        }
    }
    Ok(hit as f64 / claims.claims().len() as f64)
}
