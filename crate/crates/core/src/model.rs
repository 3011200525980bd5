//! Shared domain types.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Maximum number of citations a single statement may carry.
pub const MAX_CITATIONS: usize = 3;

/// A retrievable unit of evidence, roughly 100 words of text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Passage {
            id: id.into(),
            title: title.into(),
            text: text.into(),
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Asqa,
    Qampari,
    Eli5,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Asqa => "asqa",
            DatasetKind::Qampari => "qampari",
            DatasetKind::Eli5 => "eli5",
        }
    }

    /// Fluency is not meaningful for list-style answers.
    pub fn reports_fluency(self) -> bool {
        !matches!(self, DatasetKind::Qampari)
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "asqa" => Ok(DatasetKind::Asqa),
            "qampari" => Ok(DatasetKind::Qampari),
            "eli5" => Ok(DatasetKind::Eli5),
            other => Err(format!("unknown dataset kind `{other}`")),
        }
    }
}

/// A non-empty set of interchangeable surface forms for one gold answer.
pub type AliasSet = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct AsqaGold {
    pub qa_pairs: Vec<AliasSet>,
    pub gold_answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QampariGold {
    pub answer_sets: Vec<AliasSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eli5Gold {
    pub claims: ClaimSet,
    pub gold_answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoldAnnotation {
    Asqa(AsqaGold),
    Qampari(QampariGold),
    Eli5(Eli5Gold),
}

impl GoldAnnotation {
    pub fn kind(&self) -> DatasetKind {
        match self {
            GoldAnnotation::Asqa(_) => DatasetKind::Asqa,
            GoldAnnotation::Qampari(_) => DatasetKind::Qampari,
            GoldAnnotation::Eli5(_) => DatasetKind::Eli5,
        }
    }

    /// Long-form reference answers, empty for QAMPARI.
    pub fn long_answers(&self) -> &[String] {
        match self {
            GoldAnnotation::Asqa(g) => &g.gold_answers,
            GoldAnnotation::Eli5(g) => &g.gold_answers,
            GoldAnnotation::Qampari(_) => &[],
        }
    }
}

/// Exactly three sub-claims derived from a long gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClaimSet([String; 3]);

impl ClaimSet {
    pub fn new(claims: Vec<String>) -> Result<Self, String> {
        let n = claims.len();
        let claims: [String; 3] = claims
            .try_into()
            .map_err(|_| format!("claims must have length 3, got {n}"))?;
        if claims.iter().any(|c| c.trim().is_empty()) {
            return Err("claims must be non-empty".into());
        }
        Ok(ClaimSet(claims))
    }

    pub fn claims(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for ClaimSet {
    type Error = String;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        ClaimSet::new(v)
    }
}

impl From<ClaimSet> for Vec<String> {
    fn from(c: ClaimSet) -> Self {
        c.0.into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryInstance {
    pub id: String,
    pub question: String,
    pub gold: GoldAnnotation,
    /// Rank-ordered candidates, best first.
    pub retrieved: Vec<Passage>,
}

impl QueryInstance {
    pub fn kind(&self) -> DatasetKind {
        self.gold.kind()
    }
}

/// A raw citation token removed from a statement, kept so the original
/// text can be reconstructed. `offset` is a byte offset into the cleaned text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationMarker {
    pub offset: usize,
    pub raw: String,
}

/// One sentence (or one list entity) of a response with its citations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub text: String,
    /// 1-based passage indices, distinct, at most three.
    pub citations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<CitationMarker>,
}

impl Statement {
    /// Keeps the first three distinct indices in order.
    pub fn new(text: impl Into<String>, citations: impl IntoIterator<Item = usize>) -> Self {
        let mut kept = Vec::with_capacity(MAX_CITATIONS);
        for c in citations {
            if kept.len() == MAX_CITATIONS {
                break;
            }
            if !kept.contains(&c) {
                kept.push(c);
            }
        }
        Statement {
            text: text.into(),
            citations: kept,
            markers: Vec::new(),
        }
    }

    /// The statement text with its raw citation markers put back in place.
    pub fn reconstruct(&self) -> String {
        let mut out = self.text.clone();
        for m in self.markers.iter().rev() {
            out.insert_str(m.offset, &m.raw);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub raw_text: String,
    pub statements: Vec<Statement>,
}

impl ParsedResponse {
    pub fn n_citations(&self) -> usize {
        self.statements.iter().map(|s| s.citations.len()).sum()
    }

    /// Renders statements back to answer text with bracket citations placed
    /// before each statement's closing punctuation.
    pub fn render(&self, kind: DatasetKind) -> String {
        let pieces: Vec<String> = self
            .statements
            .iter()
            .map(|s| {
                let marks: String = s.citations.iter().map(|c| format!("[{c}]")).collect();
                if marks.is_empty() {
                    return s.text.clone();
                }
                let body = s.text.trim_end_matches(['.', '!', '?']);
                let tail = &s.text[body.len()..];
                format!("{} {marks}{tail}", body.trim_end())
            })
            .collect();
        match kind {
            DatasetKind::Qampari if pieces.is_empty() => String::new(),
            DatasetKind::Qampari => format!("{}.", pieces.join(", ")),
            _ => pieces.join(" "),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Vanilla,
    Summ,
    Snippet,
    Interact,
    InlineSearch,
    ClosedBook,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Summ => "summ",
            Strategy::Snippet => "snippet",
            Strategy::Interact => "interact",
            Strategy::InlineSearch => "inlinesearch",
            Strategy::ClosedBook => "closedbook",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "vanilla" => Strategy::Vanilla,
            "summ" | "summary" => Strategy::Summ,
            "snippet" => Strategy::Snippet,
            "interact" => Strategy::Interact,
            "inlinesearch" => Strategy::InlineSearch,
            "closedbook" => Strategy::ClosedBook,
            other => return Err(format!("unknown strategy `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstructionVariant {
    Full,
    Light,
}

impl std::str::FromStr for InstructionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(InstructionVariant::Full),
            "light" => Ok(InstructionVariant::Light),
            other => Err(format!("unknown instruction variant `{other}`")),
        }
    }
}

/// How passages are shortened before they enter the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressionMode {
    Summary,
    Snippet,
}

impl std::str::FromStr for CompressionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "summary" | "summ" => Ok(CompressionMode::Summary),
            "snippet" => Ok(CompressionMode::Snippet),
            other => Err(format!("unknown compression mode `{other}`")),
        }
    }
}

/// Fully resolved settings for one generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub strategy: Strategy,
    /// Passages placed in context (k).
    pub ndoc: usize,
    /// Demonstrations prepended to the prompt.
    pub nshot: usize,
    pub seed: u64,
    /// Responses sampled per question when reranking (n).
    pub rerank_samples: usize,
    pub rerank: bool,
    pub post_cite: bool,
    pub instruction_variant: InstructionVariant,
    pub model_id: String,
    pub temperature: f64,
    pub rerank_temperature: f64,
    pub max_tokens: usize,
    pub max_actions: usize,
    /// Compression applied to in-context passages by the Interact strategy.
    pub compression: CompressionMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetKind::Asqa,
            strategy: Strategy::Vanilla,
            ndoc: 5,
            nshot: 2,
            seed: 1,
            rerank_samples: 4,
            rerank: false,
            post_cite: false,
            instruction_variant: InstructionVariant::Full,
            model_id: "scripted".into(),
            temperature: 0.0,
            rerank_temperature: 0.7,
            max_tokens: 300,
            max_actions: 10,
            compression: CompressionMode::Summary,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rerank_samples == 0 {
            return Err("rerank_samples must be at least 1".into());
        }
        if self.max_actions == 0 {
            return Err("max_actions must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.rerank_temperature >= 0.0) {
            return Err("temperatures must be non-negative".into());
        }
        if self.instruction_variant == InstructionVariant::Light
            && !matches!(
                self.strategy,
                Strategy::Vanilla | Strategy::Summ | Strategy::Snippet
            )
        {
            return Err(format!(
                "light instruction is only defined for vanilla/summ/snippet, not {}",
                self.strategy.as_str()
            ));
        }
        Ok(())
    }

    /// Passages actually placed in the prompt.
    pub fn context_docs(&self) -> usize {
        match self.strategy {
            Strategy::ClosedBook | Strategy::InlineSearch => 0,
            _ => self.ndoc,
        }
    }

    /// Compression used for in-context passages, if any.
    pub fn compression_mode(&self) -> Option<CompressionMode> {
        match self.strategy {
            Strategy::Summ => Some(CompressionMode::Summary),
            Strategy::Snippet => Some(CompressionMode::Snippet),
            Strategy::Interact => Some(self.compression),
            _ => None,
        }
    }

    /// Samples drawn per question.
    pub fn samples(&self) -> usize {
        if self.rerank {
            self.rerank_samples
        } else {
            1
        }
    }

    /// Temperature for the given number of samples.
    pub fn sampling_temperature(&self) -> f64 {
        if self.rerank {
            self.rerank_temperature
        } else {
            self.temperature
        }
    }
}
