//! Per-example strategy dispatch and whole-run execution.

use super::compress::{compress_all, CompressedDoc};
use super::interactive::{run_inline_search, run_interact, search_pool, ActionTrace};
use super::llm::{CompletionRequest, LlmClient};
use super::prompt::{build_prompt, sample_demonstrations, Demonstration, TEMPLATE_VERSION};
use super::GenerationError;
use crate::eval::EvalError;
use crate::model::{Passage, QueryInstance, RunConfig, Strategy};
use crate::oracle::EntailmentOracle;
use crate::parser::parse_response;
use crate::post_edit::{post_cite, rerank};
use crate::retrieval::dense::Embedder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Services a run depends on. The oracle is only needed for reranking.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub llm: &'a dyn LlmClient,
    pub embedder: &'a dyn Embedder,
    pub rerank_oracle: Option<&'a EntailmentOracle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub raw_output: String,
    /// The passages that `[k]` citations in `raw_output` refer to.
    #[serde(rename = "docs")]
    pub passages: Vec<Passage>,
    /// Every sampled response, before post-editing.
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidate_recalls: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ActionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub searches: Option<usize>,
    pub prompt_template_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub id: String,
    pub message: String,
    pub backend: bool,
}

/// A generation output file: resolved config plus one record per example.
/// `failures` is non-empty when the run was aborted by a hard error; the
/// records then hold whatever finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    pub config: RunConfig,
    pub template_version: String,
    #[serde(default)]
    pub demo_questions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_oracle: Option<String>,
    pub records: Vec<GenerationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
}

fn single_call(prompt: String, config: &RunConfig, llm: &dyn LlmClient, sample: usize) -> Result<String, GenerationError> {
    let mut request = CompletionRequest::new(prompt, config.sampling_temperature(), config.max_tokens);
    request.sample = sample;
    Ok(llm.complete(&request)?)
}

fn top_passages(instance: &QueryInstance, n: usize) -> Result<&[Passage], GenerationError> {
    instance
        .retrieved
        .get(..n)
        .ok_or_else(|| GenerationError::TooFewPassages {
            id: instance.id.clone(),
            needed: n,
            have: instance.retrieved.len(),
        })
}

/// One completion over the top `ndoc` passages.
pub fn run_vanilla(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    llm: &dyn LlmClient,
    sample: usize,
) -> Result<String, GenerationError> {
    let passages = top_passages(instance, config.ndoc)?;
    single_call(build_prompt(instance, config, demos, passages)?, config, llm, sample)
}

/// One completion with no passages in context.
pub fn run_closedbook(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    llm: &dyn LlmClient,
    sample: usize,
) -> Result<String, GenerationError> {
    single_call(build_prompt(instance, config, demos, &[])?, config, llm, sample)
}

fn rerank_error(e: EvalError) -> GenerationError {
    match e {
        EvalError::Oracle(o) => GenerationError::Oracle(o),
        other => GenerationError::Config(other.to_string()),
    }
}

/// Runs the configured strategy (with sampling, reranking and post-hoc
/// citation as configured) for one instance.
pub fn generate_example(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    backends: Backends<'_>,
) -> Result<GenerationRecord, GenerationError> {
    let llm = backends.llm;
    let compressed: Vec<CompressedDoc> = match config.compression_mode() {
        Some(mode) => compress_all(top_passages(instance, config.ndoc)?, &instance.question, mode, llm)?,
        None => Vec::new(),
    };

    let mut passages: Vec<Passage> = match config.strategy {
        Strategy::Vanilla => top_passages(instance, config.ndoc)?.to_vec(),
        Strategy::Summ | Strategy::Snippet | Strategy::Interact => {
            compressed.iter().map(|d| d.passage.clone()).collect()
        }
        Strategy::InlineSearch => search_pool(instance).to_vec(),
        Strategy::ClosedBook => Vec::new(),
    };

    let mut candidates = Vec::with_capacity(config.samples());
    let mut traces = Vec::new();
    for sample in 0..config.samples() {
        let raw = match config.strategy {
            Strategy::Vanilla => run_vanilla(instance, config, demos, llm, sample)?,
            Strategy::ClosedBook => run_closedbook(instance, config, demos, llm, sample)?,
            Strategy::Summ | Strategy::Snippet => {
                let shown: Vec<Passage> = compressed.iter().map(CompressedDoc::as_passage).collect();
                single_call(build_prompt(instance, config, demos, &shown)?, config, llm, sample)?
            }
            Strategy::Interact => {
                let (raw, trace) = run_interact(instance, config, demos, llm, &compressed, sample)?;
                traces.push(trace);
                raw
            }
            Strategy::InlineSearch => {
                let (raw, trace) = run_inline_search(instance, config, demos, llm, backends.embedder, sample)?;
                traces.push(trace);
                raw
            }
        };
        candidates.push(raw);
    }

    let mut chosen = 0;
    let mut candidate_recalls = Vec::new();
    if config.rerank {
        let oracle = backends
            .rerank_oracle
            .ok_or_else(|| GenerationError::Config("reranking needs an entailment oracle".into()))?;
        let outcome = rerank(&candidates, instance, &passages, oracle).map_err(rerank_error)?;
        chosen = outcome.chosen;
        candidate_recalls = outcome.recalls;
    }

    let mut raw_output = candidates[chosen].clone();
    if config.post_cite {
        let top = search_pool(instance);
        let parsed = parse_response(&raw_output, instance.kind(), passages.len());
        raw_output = post_cite(&parsed, top, backends.embedder)?.render(instance.kind());
        passages = top.to_vec();
    }

    let trace = (!traces.is_empty()).then(|| traces.swap_remove(chosen));
    Ok(GenerationRecord {
        id: instance.id.clone(),
        raw_output,
        passages,
        searches: trace
            .as_ref()
            .filter(|_| config.strategy == Strategy::InlineSearch)
            .map(ActionTrace::searches),
        trace,
        chosen_index: config.rerank.then_some(chosen),
        candidate_recalls,
        candidates,
        prompt_template_version: TEMPLATE_VERSION.to_owned(),
    })
}

/// Generates every instance on a pool of `workers` threads. Output order
/// matches input order. Failing examples are reported in `failures`.
pub fn generate_run(
    instances: &[QueryInstance],
    config: &RunConfig,
    pool: &[Demonstration],
    backends: Backends<'_>,
    workers: usize,
) -> Result<GenerationRun, GenerationError> {
    config.validate().map_err(GenerationError::Config)?;
    if let Some(i) = instances.iter().find(|i| i.kind() != config.dataset) {
        return Err(GenerationError::Config(format!(
            "instance {} is {} but the run is configured for {}",
            i.id,
            i.kind().as_str(),
            config.dataset.as_str()
        )));
    }
    let demos = sample_demonstrations(pool, config.nshot, config.seed)?;
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GenerationError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<GenerationRecord, GenerationError>> = threads.install(|| {
        instances
            .par_iter()
            .map(|inst| generate_example(inst, config, &demos, backends))
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (inst, result) in instances.iter().zip(results) {
        match result {
            Ok(r) => records.push(r),
            Err(e) => {
                log::error!("example {}: {e}", inst.id);
                failures.push(RunFailure {
                    id: inst.id.clone(),
                    message: e.to_string(),
                    backend: e.is_backend(),
                });
            }
        }
    }
    Ok(GenerationRun {
        config: config.clone(),
        template_version: TEMPLATE_VERSION.to_owned(),
        demo_questions: demos.iter().map(|d| d.question.clone()).collect(),
        rerank_oracle: config
            .rerank
            .then(|| backends.rerank_oracle.map(|o| o.describe().to_owned()))
            .flatten(),
        records,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::llm::{ScriptedLlm, SequenceLlm};
    use crate::model::{AsqaGold, DatasetKind, GoldAnnotation};
    use crate::retrieval::dense::HashingEmbedder;
    use serde_json::json;

    fn instance(id: &str, n: usize) -> QueryInstance {
        QueryInstance {
            id: id.into(),
            question: format!("Question {id}?"),
            gold: GoldAnnotation::Asqa(AsqaGold {
                qa_pairs: vec![vec!["x".into()]],
                gold_answers: vec![],
            }),
            retrieved: (1..=n)
                .map(|i| Passage::new(format!("{id}-{i}"), format!("T{i}"), format!("fact {i} holds")))
                .collect(),
        }
    }

    fn cfg(strategy: Strategy) -> RunConfig {
        RunConfig {
            strategy,
            nshot: 0,
            ..RunConfig::default()
        }
    }

    fn backends<'a>(llm: &'a dyn LlmClient, e: &'a HashingEmbedder, o: Option<&'a EntailmentOracle>) -> Backends<'a> {
        Backends {
            llm,
            embedder: e,
            rerank_oracle: o,
        }
    }

    #[test]
    fn vanilla_echo_parses() {
        let llm = SequenceLlm::new(["Answer [1]."]);
        let e = HashingEmbedder::default();
        let inst = instance("a", 5);
        let rec = generate_example(&inst, &cfg(Strategy::Vanilla), &[], backends(&llm, &e, None)).unwrap();
        let parsed = parse_response(&rec.raw_output, DatasetKind::Asqa, rec.passages.len());
        assert_eq!(parsed.statements.len(), 1);
        assert_eq!(parsed.statements[0].citations, [1]);
        assert_eq!(rec.passages.len(), 5);
    }

    #[test]
    fn closedbook_citations_do_not_survive() {
        let llm = SequenceLlm::new(["Claim [1]."]);
        let e = HashingEmbedder::default();
        let rec = generate_example(&instance("a", 5), &cfg(Strategy::ClosedBook), &[], backends(&llm, &e, None)).unwrap();
        assert!(rec.passages.is_empty());
        let parsed = parse_response(&rec.raw_output, DatasetKind::Asqa, rec.passages.len());
        assert_eq!(parsed.n_citations(), 0);
    }

    #[test]
    fn summ_filters_and_renumbers() {
        let mut replies: Vec<String> = (0..10)
            .map(|i| if [1, 4, 7].contains(&i) { "irrelevant".into() } else { format!("short {i}") })
            .collect();
        replies.push("Done [7].".into());
        let llm = SequenceLlm::new(replies);
        let e = HashingEmbedder::default();
        let config = RunConfig {
            ndoc: 10,
            ..cfg(Strategy::Summ)
        };
        let rec = generate_example(&instance("a", 10), &config, &[], backends(&llm, &e, None)).unwrap();
        assert_eq!(rec.passages.len(), 7);
        let prompt = llm.prompts().pop().unwrap();
        assert_eq!(prompt.matches("\nDocument [").count(), 7);
        assert!(prompt.contains("Document [7](Title: T10): short 9\n"));
        assert_eq!(rec.passages[6].text, "fact 10 holds");
    }

    #[test]
    fn rerank_stores_candidates() {
        let llm = SequenceLlm::new(["Nothing [1].", "Fact 2 holds [2].", "Fact 3 holds [1].", "Fact 1 holds [1]."]);
        let e = HashingEmbedder::default();
        let oracle = EntailmentOracle::substring();
        let config = RunConfig {
            rerank: true,
            ..cfg(Strategy::Vanilla)
        };
        let rec = generate_example(&instance("a", 5), &config, &[], backends(&llm, &e, Some(&oracle))).unwrap();
        assert_eq!(rec.candidates.len(), 4);
        assert_eq!(rec.chosen_index, Some(1));
        assert_eq!(rec.candidate_recalls, vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(rec.raw_output, "Fact 2 holds [2].");

        let llm = SequenceLlm::new(["x"; 4]);
        let err = generate_example(&instance("a", 5), &config, &[], backends(&llm, &e, None)).unwrap_err();
        assert!(matches!(err, GenerationError::Config(_)));
    }

    #[test]
    fn post_cite_uses_retrieved_list() {
        let llm = SequenceLlm::new(["Fact 4 holds. Fact 2 holds [1]."]);
        let e = HashingEmbedder::default();
        let config = RunConfig {
            post_cite: true,
            ..cfg(Strategy::ClosedBook)
        };
        let rec = generate_example(&instance("a", 6), &config, &[], backends(&llm, &e, None)).unwrap();
        assert_eq!(rec.raw_output, "Fact 4 holds [4]. Fact 2 holds [2].");
        assert_eq!(rec.passages.len(), 6);
    }

    #[test]
    fn run_preserves_order_and_reports_failures() {
        let insts = vec![instance("a", 5), instance("b", 2), instance("c", 5)];
        let llm = ScriptedLlm::from_json(json!({"*": ["Out [1]."]})).unwrap();
        let e = HashingEmbedder::default();
        let run = generate_run(&insts, &cfg(Strategy::Vanilla), &[], backends(&llm, &e, None), 3).unwrap();
        let ids: Vec<_> = run.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].id, "b");
        assert!(!run.failures[0].backend);
    }

    #[test]
    fn light_instruction_rejected_for_interactive() {
        let llm = SequenceLlm::new(Vec::<String>::new());
        let e = HashingEmbedder::default();
        let config = RunConfig {
            instruction_variant: crate::model::InstructionVariant::Light,
            ..cfg(Strategy::Interact)
        };
        assert!(generate_run(&[], &config, &[], backends(&llm, &e, None), 1).is_err());
    }
}
