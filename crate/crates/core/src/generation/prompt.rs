//! Prompt templates and few-shot prompt assembly.

use super::GenerationError;
use crate::model::{InstructionVariant, Passage, QueryInstance, RunConfig, Strategy};
use crate::parser::{extract_citations, split_sentences};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bumped whenever any template text changes.
pub const TEMPLATE_VERSION: &str = "v1";

pub const INSTRUCTION_VANILLA: &str = include_str!("../../templates/instruction_vanilla.txt");
pub const INSTRUCTION_VANILLA_LIGHT: &str =
    include_str!("../../templates/instruction_vanilla_light.txt");
pub const INSTRUCTION_INTERACT: &str = include_str!("../../templates/instruction_interact.txt");
pub const INSTRUCTION_INLINE_SEARCH: &str =
    include_str!("../../templates/instruction_inlinesearch.txt");
pub const INSTRUCTION_CLOSED_BOOK: &str = include_str!("../../templates/instruction_closedbook.txt");
pub const SUMMARY_TEMPLATE: &str = include_str!("../../templates/summary.txt");
pub const SNIPPET_TEMPLATE: &str = include_str!("../../templates/snippet.txt");
pub const CLAIMS_TEMPLATE: &str = include_str!("../../templates/claims.txt");

/// A worked example shown before the test question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub question: String,
    #[serde(rename = "docs", default)]
    pub passages: Vec<Passage>,
    pub answer: String,
}

impl Demonstration {
    fn validate(&self, which: usize) -> Result<(), GenerationError> {
        for sentence in split_sentences(&self.answer) {
            let ex = extract_citations(sentence, self.passages.len());
            if let Some(&(k, _)) = ex
                .dropped
                .iter()
                .find(|(_, r)| *r == crate::parser::DropReason::OutOfRange)
            {
                return Err(GenerationError::Prompt(format!(
                    "demonstration {which} cites [{k}] but has {} passages",
                    self.passages.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn instruction(strategy: Strategy, variant: InstructionVariant) -> &'static str {
    match (strategy, variant) {
        (Strategy::Vanilla | Strategy::Summ | Strategy::Snippet, InstructionVariant::Full) => {
            INSTRUCTION_VANILLA
        }
        (Strategy::Vanilla | Strategy::Summ | Strategy::Snippet, InstructionVariant::Light) => {
            INSTRUCTION_VANILLA_LIGHT
        }
        (Strategy::Interact, _) => INSTRUCTION_INTERACT,
        (Strategy::InlineSearch, _) => INSTRUCTION_INLINE_SEARCH,
        (Strategy::ClosedBook, _) => INSTRUCTION_CLOSED_BOOK,
    }
}

/// `Document [i](Title: {title}): {text}`
pub fn document_line(index: usize, passage: &Passage) -> String {
    format!("Document [{index}](Title: {}): {}", passage.title, passage.text)
}

fn is_interactive(strategy: Strategy) -> bool {
    matches!(strategy, Strategy::Interact | Strategy::InlineSearch)
}

fn render_block(strategy: Strategy, question: &str, passages: &[Passage], answer: Option<&str>) -> String {
    let mut out = String::new();
    for (i, p) in passages.iter().enumerate() {
        out.push_str(&document_line(i + 1, p));
        out.push('\n');
    }
    if !passages.is_empty() {
        out.push('\n');
    }
    out.push_str("Question: ");
    out.push_str(question);
    out.push('\n');
    if is_interactive(strategy) {
        if let Some(answer) = answer {
            for sentence in split_sentences(answer) {
                out.push_str("Output: ");
                out.push_str(sentence.trim());
                out.push('\n');
            }
            out.push_str("End.");
        }
    } else {
        out.push_str("Answer:");
        if let Some(answer) = answer {
            out.push(' ');
            out.push_str(answer);
        }
    }
    out
}

/// Assembles the full prompt: instruction, demonstrations, then the test
/// question with its passages. Interactive strategies end after the
/// question line so the model continues with actions.
pub fn build_prompt(
    instance: &QueryInstance,
    config: &RunConfig,
    demos: &[Demonstration],
    passages: &[Passage],
) -> Result<String, GenerationError> {
    if demos.len() != config.nshot {
        return Err(GenerationError::Prompt(format!(
            "expected {} demonstrations, got {}",
            config.nshot,
            demos.len()
        )));
    }
    let want = config.context_docs();
    let ok = match config.strategy {
        Strategy::Vanilla | Strategy::ClosedBook | Strategy::InlineSearch => passages.len() == want,
        // Compression may filter passages out.
        Strategy::Summ | Strategy::Snippet | Strategy::Interact => passages.len() <= want,
    };
    if !ok {
        return Err(GenerationError::Prompt(format!(
            "{} expects {want} passages, got {}",
            config.strategy.as_str(),
            passages.len()
        )));
    }
    for (i, d) in demos.iter().enumerate() {
        d.validate(i)?;
    }

    let strategy = config.strategy;
    let mut blocks = Vec::with_capacity(demos.len() + 1);
    for d in demos {
        let demo_passages: &[Passage] = if strategy == Strategy::ClosedBook || strategy == Strategy::InlineSearch {
            &[]
        } else {
            &d.passages
        };
        blocks.push(render_block(strategy, &d.question, demo_passages, Some(&d.answer)));
    }
    blocks.push(render_block(strategy, &instance.question, passages, None));
    Ok(format!(
        "{}\n\n{}",
        instruction(strategy, config.instruction_variant),
        blocks.join("\n\n\n")
    ))
}

/// Seeded draw of `nshot` demonstrations without replacement.
pub fn sample_demonstrations(
    pool: &[Demonstration],
    nshot: usize,
    seed: u64,
) -> Result<Vec<Demonstration>, GenerationError> {
    if nshot > pool.len() {
        return Err(GenerationError::Config(format!(
            "cannot draw {nshot} demonstrations from a pool of {}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, pool.len(), nshot)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// Fills `{QUESTION}`, `{TITLE}` and `{TEXT}` in a compression template.
pub fn compression_prompt(template: &str, question: &str, passage: &Passage) -> String {
    template
        .replace("{QUESTION}", question)
        .replace("{TITLE}", &passage.title)
        .replace("{TEXT}", &passage.text)
}
