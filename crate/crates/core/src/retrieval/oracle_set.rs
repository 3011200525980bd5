//! Greedy construction of a small passage set that maximizes answer recall.

use super::RetrievalError;
use crate::eval::correctness::{alias_coverage, claim_recall_eli5};
use crate::model::{GoldAnnotation, Passage, QueryInstance};
use crate::oracle::{render_premise, EntailmentOracle, OracleError};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSet {
    /// 0-based positions in the candidate list, in rank order.
    pub indices: Vec<usize>,
    pub passages: Vec<Passage>,
    pub initial_recall: f64,
    pub recall: f64,
}

const GAIN_EPS: f64 = 1e-12;

/// Picks `set_size` passages from `instance.retrieved`.
///
/// Passages are first ranked by their individual recall and the best
/// `set_size` form the starting set. Each remaining passage, in retrieval
/// order, then replaces whichever member gives the largest strictly
/// positive gain in set recall. Equal gains evict the lowest-ranked member.
pub fn build_oracle_set(
    instance: &QueryInstance,
    scorer: impl Fn(&[&Passage]) -> Result<f64, OracleError>,
    set_size: usize,
) -> Result<OracleSet, RetrievalError> {
    let cands = &instance.retrieved;
    if set_size == 0 || cands.len() < set_size {
        return Err(RetrievalError::TooFewPassages {
            needed: set_size.max(1),
            have: cands.len(),
        });
    }
    let score_of = |idx: &[usize]| -> Result<f64, OracleError> {
        let set: Vec<&Passage> = idx.iter().map(|&i| &cands[i]).collect();
        scorer(&set)
    };

    let individual = (0..cands.len())
        .map(|i| score_of(&[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| individual[b].total_cmp(&individual[a]).then(a.cmp(&b)));
    let mut set: Vec<usize> = order[..set_size].to_vec();
    let initial_recall = score_of(&set)?;
    let mut current = initial_recall;

    let remaining: Vec<usize> = (0..cands.len()).filter(|i| !set.contains(i)).collect();
    for cand in remaining {
        let mut best: Option<(usize, f64, f64)> = None;
        for pos in 0..set_size {
            let mut trial = set.clone();
            trial[pos] = cand;
            let value = score_of(&trial)?;
            let gain = value - current;
            if gain <= GAIN_EPS {
                continue;
            }
            let better = match best {
                None => true,
                Some((bpos, bgain, _)) => {
                    gain > bgain + GAIN_EPS || ((gain - bgain).abs() <= GAIN_EPS && set[pos] > set[bpos])
                }
            };
            if better {
                best = Some((pos, gain, value));
            }
        }
        if let Some((pos, _, value)) = best {
            set[pos] = cand;
            current = value;
        }
    }

    set.sort_unstable();
    Ok(OracleSet {
        passages: set.iter().map(|&i| cands[i].clone()).collect(),
        indices: set,
        initial_recall,
        recall: current,
    })
}

/// Recall of a passage set against the instance's gold answers: EM recall
/// for ASQA, recall-5 for QAMPARI and claim recall for ELI5.
pub fn passage_set_recall(
    instance: &QueryInstance,
    passages: &[&Passage],
    oracle: &EntailmentOracle,
) -> Result<f64, OracleError> {
    if passages.is_empty() {
        return Ok(0.0);
    }
    let text: String = passages
        .iter()
        .map(|p| p.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(match &instance.gold {
        GoldAnnotation::Asqa(g) => {
            if g.qa_pairs.is_empty() {
                0.0
            } else {
                alias_coverage(&text, &g.qa_pairs) as f64 / g.qa_pairs.len() as f64
            }
        }
        GoldAnnotation::Qampari(g) => {
            let hit = alias_coverage(&text, &g.answer_sets);
            let denom = g.answer_sets.len().min(5);
            if denom == 0 {
                0.0
            } else {
                hit.min(5) as f64 / denom as f64
            }
        }
        GoldAnnotation::Eli5(g) => {
            let premise = render_premise(passages.iter().copied())?;
            claim_recall_eli5(&premise, &g.claims, oracle)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AsqaGold, QampariGold};

    fn instance(texts: &[&str], answers: &[&str]) -> QueryInstance {
        QueryInstance {
            id: "q".into(),
            question: "q?".into(),
            gold: GoldAnnotation::Asqa(AsqaGold {
                qa_pairs: answers.iter().map(|a| vec![a.to_string()]).collect(),
                gold_answers: vec![],
            }),
            retrieved: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Passage::new(format!("d{i}"), "t", *t))
                .collect(),
        }
    }

    #[test]
    fn zero_scores_keep_initial_top() {
        let inst = instance(&["x"; 8], &["zzz"]);
        let o = EntailmentOracle::substring();
        let set = build_oracle_set(&inst, |s| passage_set_recall(&inst, s, &o), 5)
            .unwrap();
        assert_eq!(set.indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(set.recall, 0.0);
    }

    #[test]
    fn too_few_passages() {
        let inst = instance(&["a", "b"], &["a"]);
        let r = build_oracle_set(&inst, |_| Ok(0.0), 5);
        assert!(matches!(r, Err(RetrievalError::TooFewPassages { needed: 5, have: 2 })));
    }

    #[test]
    fn replacement_improves_coverage() {
        // Passages 0..=4 all cover "alpha" only; 5 and 6 add new answers.
        let texts = ["alpha", "alpha", "alpha", "alpha", "alpha", "beta", "gamma"];
        let inst = instance(&texts, &["alpha", "beta", "gamma"]);
        let o = EntailmentOracle::substring();
        let set = build_oracle_set(&inst, |s| passage_set_recall(&inst, s, &o), 5)
            .unwrap();
        assert!((set.initial_recall - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(set.recall, 1.0);
        // Ties evict the lowest-ranked member first.
        assert_eq!(set.indices, vec![0, 1, 2, 5, 6]);
    }

    #[test]
    fn qampari_recall_saturates_at_five() {
        let texts: Vec<String> = (0..6).map(|i| format!("film{i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let mut inst = instance(&refs, &[]);
        inst.gold = GoldAnnotation::Qampari(QampariGold {
            answer_sets: (0..13).map(|i| vec![format!("film{i}")]).collect(),
        });
        let o = EntailmentOracle::substring();
        let all: Vec<&Passage> = inst.retrieved.iter().collect();
        assert_eq!(passage_set_recall(&inst, &all[..5], &o).unwrap(), 1.0);
        assert_eq!(passage_set_recall(&inst, &all[..2], &o).unwrap(), 0.4);
    }
}
