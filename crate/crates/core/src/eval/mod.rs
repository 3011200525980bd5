//! Scoring of generated answers.

pub mod citation;
pub mod claims;
pub mod correctness;
pub mod fluency;
pub mod report;
pub mod rouge;

pub use citation::{citation_precision, citation_recall, citation_scores, CitationScores};
pub use claims::{generate_claims, ClaimError};
pub use correctness::{claim_recall_eli5, em_recall_asqa, qampari_scores, QampariScores};
pub use fluency::{fluency_preprocess, fluency_score, ConstantFluency, FluencyBackend, RemoteMauve};
pub use report::{aggregate, render_table, EvalReport, ExampleScores, MetricSummary};
pub use rouge::rouge_l;

use crate::generation::{GenerationRecord, GenerationRun};
use crate::model::{DatasetKind, GoldAnnotation, QueryInstance};
use crate::oracle::{EntailmentOracle, OracleError};
use crate::parser::{segment_with_log, truncate_output};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("statement {statement} cites [{index}] but only {passages} passages are available")]
    InvalidCitation {
        statement: usize,
        index: usize,
        passages: usize,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Invalid(String),
    #[error("reports differ in more than the seed: {0}")]
    ConfigMismatch(String),
    #[error("ids missing from the dataset: [{}]; ids missing from the generation file: [{}]",
        .missing_in_dataset.join(", "), .missing_in_generation.join(", "))]
    MissingIds {
        missing_in_dataset: Vec<String>,
        missing_in_generation: Vec<String>,
    },
}

/// Scores one generated answer. Citation indices refer to the record's
/// passages; correctness is computed on the newline-truncated output.
pub fn evaluate_example(
    record: &GenerationRecord,
    instance: &QueryInstance,
    oracle: &EntailmentOracle,
) -> Result<ExampleScores, EvalError> {
    let output = truncate_output(&record.raw_output);
    let (parsed, dropped) = segment_with_log(output, instance.kind(), record.passages.len());
    let cites = citation_scores(&parsed, &record.passages, oracle)?;
    let mut scores = ExampleScores {
        id: record.id.clone(),
        n_statements: cites.n_statements(),
        n_citations: cites.n_citations(),
        citation_recall: cites.recall,
        citation_precision: cites.precision,
        em_recall: None,
        qampari_precision: None,
        qampari_recall: None,
        qampari_recall_5: None,
        claim_recall: None,
        rouge_l: None,
        dropped_citations: dropped,
    };
    match &instance.gold {
        GoldAnnotation::Asqa(g) => scores.em_recall = Some(em_recall_asqa(output, g)),
        GoldAnnotation::Qampari(g) => {
            let q = qampari_scores(&parsed, g);
            scores.qampari_precision = Some(q.precision);
            scores.qampari_recall = Some(q.recall);
            scores.qampari_recall_5 = Some(q.recall_5);
        }
        GoldAnnotation::Eli5(g) => {
            scores.claim_recall = Some(claim_recall_eli5(output, &g.claims, oracle)?)
        }
    }
    let refs = instance.gold.long_answers();
    if !refs.is_empty() {
        scores.rouge_l = Some(rouge_l(output, refs));
    }
    Ok(scores)
}

fn check_ids(run: &GenerationRun, dataset: &[QueryInstance]) -> Result<(), EvalError> {
    let gen_ids: HashSet<&str> = run.records.iter().map(|r| r.id.as_str()).collect();
    let data_ids: HashSet<&str> = dataset.iter().map(|i| i.id.as_str()).collect();
    let missing_in_dataset: Vec<String> = run
        .records
        .iter()
        .filter(|r| !data_ids.contains(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    let missing_in_generation: Vec<String> = dataset
        .iter()
        .filter(|i| !gen_ids.contains(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    if missing_in_dataset.is_empty() && missing_in_generation.is_empty() {
        Ok(())
    } else {
        Err(EvalError::MissingIds {
            missing_in_dataset,
            missing_in_generation,
        })
    }
}

/// Scores a generation run against its dataset.
pub fn evaluate_run(
    run: &GenerationRun,
    dataset: &[QueryInstance],
    oracle: &EntailmentOracle,
    fluency: Option<&dyn FluencyBackend>,
) -> Result<EvalReport, EvalError> {
    check_ids(run, dataset)?;
    let kind: DatasetKind = run.config.dataset;
    if let Some(i) = dataset.iter().find(|i| i.kind() != kind) {
        return Err(EvalError::Invalid(format!(
            "instance {} is {} but the run was generated for {}",
            i.id,
            i.kind().as_str(),
            kind.as_str()
        )));
    }
    let by_id: HashMap<&str, &QueryInstance> = dataset.iter().map(|i| (i.id.as_str(), i)).collect();
    let per_example = run
        .records
        .par_iter()
        .map(|r| evaluate_example(r, by_id[r.id.as_str()], oracle))
        .collect::<Result<Vec<_>, _>>()?;

    let mut aggregate = report::example_means(&per_example);
    if kind.reports_fluency() {
        if let Some(backend) = fluency {
            let pairs: Vec<(String, String)> = run
                .records
                .iter()
                .filter_map(|r| {
                    let inst = by_id[r.id.as_str()];
                    let human = inst.gold.long_answers().first()?;
                    Some((
                        fluency_preprocess(&inst.question, human),
                        fluency_preprocess(&inst.question, truncate_output(&r.raw_output)),
                    ))
                })
                .collect();
            if let Some(v) = fluency_score(&pairs, backend) {
                aggregate.insert(report::FLUENCY.to_owned(), MetricSummary { mean: v, std: 0.0 });
            }
        }
    }

    Ok(EvalReport {
        config: run.config.clone(),
        template_version: run.template_version.clone(),
        oracle: oracle.describe().to_owned(),
        rerank_oracle_is_eval_oracle: run.rerank_oracle.as_ref().map(|r| r == oracle.describe()),
        seeds: vec![run.config.seed],
        per_example,
        aggregate: aggregate.into_iter().collect::<BTreeMap<_, _>>(),
    })
}
