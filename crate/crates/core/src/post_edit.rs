//! Response refinement: best-of-n reranking and post-hoc citation.

use crate::eval::citation::citation_recall;
use crate::eval::EvalError;
use crate::model::{ParsedResponse, Passage, QueryInstance};
use crate::oracle::EntailmentOracle;
use crate::parser::parse_response;
use crate::retrieval::dense::{order_by_vectors, EmbedError, Embedder};

#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    pub chosen: usize,
    pub recalls: Vec<f64>,
}

/// Index of the largest score, lowest index on ties. `None` when empty.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Scores every candidate by citation recall and picks the best.
pub fn rerank(
    candidates: &[String],
    instance: &QueryInstance,
    passages: &[Passage],
    oracle: &EntailmentOracle,
) -> Result<RerankOutcome, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::Invalid("rerank needs at least one candidate".into()));
    }
    let recalls = candidates
        .iter()
        .map(|c| {
            let parsed = parse_response(c, instance.kind(), passages.len());
            citation_recall(&parsed, passages, oracle)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chosen = select_best(&recalls).expect("non-empty");
    Ok(RerankOutcome { chosen, recalls })
}

/// Replaces every statement's citations with the single passage most
/// similar to it. Indices are 1-based positions in `top`. With no
/// passages to choose from, citations are simply removed.
pub fn post_cite(
    parsed: &ParsedResponse,
    top: &[Passage],
    embedder: &dyn Embedder,
) -> Result<ParsedResponse, EmbedError> {
    let mut out = parsed.clone();
    if out.statements.is_empty() {
        return Ok(out);
    }
    let vectors = if top.is_empty() {
        Vec::new()
    } else {
        let texts: Vec<&str> = top.iter().map(|p| p.text.as_str()).collect();
        embedder.embed(&texts)?
    };
    for s in &mut out.statements {
        s.markers.clear();
        s.citations.clear();
        if let Some(&(best, _)) = order_by_vectors(&s.text, &vectors, embedder)?.first() {
            s.citations.push(best + 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AsqaGold, DatasetKind, GoldAnnotation, Statement};
    use crate::retrieval::dense::HashingEmbedder;

    #[test]
    fn select_best_ties_go_low() {
        assert_eq!(select_best(&[0.5, 1.0, 0.0, 1.0]), Some(1));
        assert_eq!(select_best(&[0.0; 4]), Some(0));
        assert_eq!(select_best(&[]), None);
    }

    fn passages(n: usize) -> Vec<Passage> {
        (1..=n)
            .map(|i| Passage::new(format!("p{i}"), format!("T{i}"), format!("topic {i} is about thing number {i}")))
            .collect()
    }

    #[test]
    fn post_cite_single_argmax() {
        let top = passages(10);
        let parsed = ParsedResponse {
            raw_text: String::new(),
            statements: vec![
                Statement::new("topic 7 is about thing number 7", [1, 2]),
                Statement::new("topic 2 is about thing number 2", []),
                Statement::new("topic 9 is about thing number 9", [3]),
            ],
        };
        let e = HashingEmbedder::default();
        let out = post_cite(&parsed, &top, &e).unwrap();
        let cites: Vec<_> = out.statements.iter().map(|s| s.citations.clone()).collect();
        assert_eq!(cites, vec![vec![7], vec![2], vec![9]]);
        assert_eq!(post_cite(&out, &top, &e).unwrap(), out);
        assert_eq!(out.render(DatasetKind::Asqa), "topic 7 is about thing number 7 [7] topic 2 is about thing number 2 [2] topic 9 is about thing number 9 [9]");
    }

    #[test]
    fn post_cite_empty_response() {
        let empty = ParsedResponse {
            raw_text: String::new(),
            statements: vec![],
        };
        assert_eq!(post_cite(&empty, &passages(3), &HashingEmbedder::default()).unwrap(), empty);
    }

    #[test]
    fn rerank_picks_supported_candidate() {
        let ps = passages(2);
        let instance = QueryInstance {
            id: "i".into(),
            question: "q".into(),
            gold: GoldAnnotation::Asqa(AsqaGold {
                qa_pairs: vec![vec!["x".into()]],
                gold_answers: vec![],
            }),
            retrieved: ps.clone(),
        };
        let candidates = vec![
            "Unsupported claim [1].".to_string(),
            "Topic 2 is about thing number 2 [2].".to_string(),
            "No citations here.".to_string(),
        ];
        let out = rerank(&candidates, &instance, &ps, &EntailmentOracle::substring()).unwrap();
        assert_eq!(out.chosen, 1);
        assert_eq!(out.recalls, vec![0.0, 1.0, 0.0]);
    }
}
