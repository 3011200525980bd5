//! Action loops for the Interact and InlineSearch strategies.
//!
//! Continuations are read line by line. Each line starts with an action
//! name (`Check:`, `Search:`, `Output:`, `End`) and the rest of the line is
//! its payload. Passages shown by Check or Search stay in context only until
//! the next action is taken.

use super::compress::CompressedDoc;
use super::llm::{CompletionRequest, LlmClient};
use super::prompt::{build_prompt, document_line, Demonstration};
use super::GenerationError;
use crate::model::{Passage, QueryInstance, RunConfig, Strategy};
use crate::parser::extract_citations;
use crate::retrieval::dense::{order_by_vectors, EmbedError, Embedder};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// InlineSearch only searches among this many top retrieved passages.
pub const SEARCH_POOL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Check,
    Search,
    Output,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStep {
    pub action: Action,
    pub payload: String,
    /// 0-based positions of the passages put in context by this step.
    pub shown_passages: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTrace {
    pub steps: Vec<ActionStep>,
    /// Set when the episode stopped at the action cap instead of at End.
    pub capped: bool,
}

impl ActionTrace {
    pub fn searches(&self) -> usize {
        self.count(Action::Search)
    }

    pub fn count(&self, action: Action) -> usize {
        self.steps.iter().filter(|s| s.action == action).count()
    }
}

fn parse_action(line: &str) -> Option<(Action, &str)> {
    let t = line.trim();
    if t.trim_end_matches('.').eq_ignore_ascii_case("end") {
        return Some((Action::End, ""));
    }
    let (name, payload) = t.split_once(':')?;
    let action = match name.trim().to_ascii_lowercase().as_str() {
        "check" => Action::Check,
        "search" => Action::Search,
        "output" => Action::Output,
        "end" => Action::End,
        _ => return None,
    };
    Some((action, payload.trim()))
}

enum Tool<'a> {
    Check(&'a [CompressedDoc]),
    Search {
        candidates: &'a [Passage],
        vectors: Vec<Vec<f32>>,
        embedder: &'a dyn Embedder,
    },
}

struct Episode {
    /// Context lines after the base prompt; the flag marks removable ones.
    entries: Vec<(String, bool)>,
    trace: ActionTrace,
    shown_ever: HashSet<usize>,
}

impl Episode {
    fn record(&mut self, action: Action, payload: &str, shown: Vec<usize>) {
        self.entries.retain(|(_, removable)| !removable);
        self.trace.steps.push(ActionStep {
            action,
            payload: payload.to_owned(),
            shown_passages: shown,
        });
    }

    fn output(&mut self, payload: &str) {
        self.record(Action::Output, payload, Vec::new());
        self.entries.push((format!("Output: {payload}"), false));
    }

    fn prompt(&self, base: &str, force_output: bool) -> String {
        let mut p = base.to_owned();
        for (line, _) in &self.entries {
            p.push_str(line);
            p.push('\n');
        }
        if force_output {
            p.push_str("Output:");
        }
        p
    }

    fn answer(&self) -> String {
        self.trace
            .steps
            .iter()
            .filter(|s| s.action == Action::Output && !s.payload.is_empty())
            .map(|s| s.payload.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// What the loop should do after handling one line.
enum Next {
    Line,
    Call,
    Stop,
}

fn handle_line(ep: &mut Episode, tool: &Tool<'_>, line: &str, force_output: &mut bool) -> Result<Next, EmbedError> {
    match (parse_action(line), tool) {
        (Some((Action::Output, payload)), _) => {
            ep.output(payload);
            Ok(Next::Line)
        }
        (Some((Action::End, _)), _) => {
            ep.record(Action::End, "", Vec::new());
            Ok(Next::Stop)
        }
        (Some((Action::Check, payload)), Tool::Check(docs)) => {
            let wanted = extract_citations(payload, docs.len()).citations;
            if wanted.is_empty() {
                log::warn!("check without a valid document: {line:?}; ending episode");
                ep.record(Action::End, line.trim(), Vec::new());
                return Ok(Next::Stop);
            }
            ep.record(Action::Check, payload, wanted.iter().map(|k| k - 1).collect());
            ep.entries.push((format!("Check: {payload}"), false));
            for &k in &wanted {
                ep.entries.push((document_line(k, &docs[k - 1].passage), true));
            }
            *force_output = true;
            Ok(Next::Call)
        }
        (
            Some((Action::Search, query)),
            Tool::Search {
                candidates,
                vectors,
                embedder,
            },
        ) => {
            let best = order_by_vectors(query, vectors, *embedder)?
                .into_iter()
                .map(|(i, _)| i)
                .find(|i| !ep.shown_ever.contains(i));
            ep.record(Action::Search, query, best.into_iter().collect());
            ep.entries.push((format!("Search: {query}"), false));
            match best {
                Some(i) => {
                    ep.shown_ever.insert(i);
                    ep.entries.push((document_line(i + 1, &candidates[i]), true));
                }
                None => log::debug!("search {query:?}: every candidate already shown"),
            }
            Ok(Next::Call)
        }
        _ => {
            log::warn!("unusable action line {line:?}; ending episode");
            ep.record(Action::End, line.trim(), Vec::new());
            Ok(Next::Stop)
        }
    }
}

fn run_loop(
    base: &str,
    tool: Tool<'_>,
    config: &RunConfig,
    llm: &dyn LlmClient,
    sample: usize,
) -> Result<(String, ActionTrace), GenerationError> {
    let cap = config.max_actions;
    let mut ep = Episode {
        entries: Vec::new(),
        trace: ActionTrace::default(),
        shown_ever: HashSet::new(),
    };
    let mut force_output = false;

    'episode: loop {
        if ep.trace.steps.len() >= cap {
            ep.trace.capped = true;
            break;
        }
        let mut request = CompletionRequest::new(
            ep.prompt(base, force_output),
            config.sampling_temperature(),
            config.max_tokens,
        );
        request.sample = sample;
        let reply = llm.complete(&request)?;
        let mut lines = reply.lines().filter(|l| !l.trim().is_empty()).peekable();
        if lines.peek().is_none() {
            log::warn!("empty continuation; ending episode");
            ep.record(Action::End, "", Vec::new());
            break;
        }
        if std::mem::take(&mut force_output) {
            let first = lines.next().expect("peeked").trim();
            let payload = first.strip_prefix("Output:").map_or(first, str::trim);
            ep.output(payload);
        }
        for line in lines {
            if ep.trace.steps.len() >= cap {
                ep.trace.capped = true;
                break 'episode;
            }
            match handle_line(&mut ep, &tool, line, &mut force_output)? {
                Next::Line => {}
                Next::Call => continue 'episode,
                Next::Stop => break 'episode,
            }
        }
    }
    Ok((ep.answer(), ep.trace))
}

/// Runs the Interact loop over compressed passages; Check reveals full text.
pub fn run_interact(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    llm: &dyn LlmClient,
    compressed: &[CompressedDoc],
    sample: usize,
) -> Result<(String, ActionTrace), GenerationError> {
    if config.strategy != Strategy::Interact {
        return Err(GenerationError::Config("run_interact needs the interact strategy".into()));
    }
    let shown: Vec<Passage> = compressed.iter().map(CompressedDoc::as_passage).collect();
    let base = build_prompt(instance, config, demos, &shown)?;
    run_loop(&base, Tool::Check(compressed), config, llm, sample)
}

/// Runs the InlineSearch loop; each Search shows the single most similar
/// unseen passage among the top retrieved candidates.
pub fn run_inline_search(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    llm: &dyn LlmClient,
    embedder: &dyn Embedder,
    sample: usize,
) -> Result<(String, ActionTrace), GenerationError> {
    if config.strategy != Strategy::InlineSearch {
        return Err(GenerationError::Config(
            "run_inline_search needs the inlinesearch strategy".into(),
        ));
    }
    let candidates = search_pool(instance);
    if candidates.is_empty() {
        return Err(GenerationError::TooFewPassages {
            id: instance.id.clone(),
            needed: 1,
            have: 0,
        });
    }
    let texts: Vec<&str> = candidates.iter().map(|p| p.text.as_str()).collect();
    let vectors = embedder.embed(&texts)?;
    let base = build_prompt(instance, config, demos, &[])?;
    let tool = Tool::Search {
        candidates,
        vectors,
        embedder,
    };
    run_loop(&base, tool, config, llm, sample)
}

/// The passages InlineSearch may show and cite.
pub fn search_pool(instance: &QueryInstance) -> &[Passage] {
    &instance.retrieved[..instance.retrieved.len().min(SEARCH_POOL)]
}
