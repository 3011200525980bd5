//! Turns raw model output into statements carrying bracket citations.
//!
//! The sentence splitter is a small hand-written state machine: a boundary
//! is a run of `.`, `!` or `?` (plus closing quotes or parentheses)
//! followed by whitespace, a citation marker or the end of the text.
//! Periods after common titles, single-letter initials and dotted
//! abbreviations (`U.S.`, `e.g.`) do not end a sentence, and neither does
//! an ellipsis followed by a lowercase word. Citation markers
//! that directly follow a boundary belong to the sentence before it.

use crate::model::{CitationMarker, DatasetKind, ParsedResponse, Statement, MAX_CITATIONS};
use serde::{Deserialize, Serialize};

/// Lowercased words whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "gen", "col", "lt", "sgt", "capt",
    "gov", "sen", "rep", "rev", "hon", "pres", "vs", "no", "fig", "approx", "ca", "cf", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

const TERMINATORS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 5] = ['"', '\'', ')', '\u{201d}', '\u{2019}'];
const TIGHT_PUNCT: [char; 6] = ['.', ',', ';', ':', '!', '?'];

/// Keeps everything before the first newline, trimmed.
pub fn truncate_output(raw: &str) -> &str {
    raw.split('\n').next().unwrap_or("").trim()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Index is zero or larger than the number of candidate passages.
    OutOfRange,
    Duplicate,
    /// Valid index beyond the first three.
    OverCap,
    /// Marker belonged to a fragment with no text of its own.
    Orphaned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedCitation {
    pub statement_index: usize,
    pub dropped_index: usize,
    pub reason: DropReason,
}

/// One line of the JSON-lines parse log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseLogEntry {
    pub example_id: String,
    pub statement_index: usize,
    pub dropped_index: usize,
    pub reason: DropReason,
}

impl ParseLogEntry {
    pub fn from_dropped(example_id: &str, d: &DroppedCitation) -> Self {
        ParseLogEntry {
            example_id: example_id.to_owned(),
            statement_index: d.statement_index,
            dropped_index: d.dropped_index,
            reason: d.reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub text: String,
    pub citations: Vec<usize>,
    pub markers: Vec<CitationMarker>,
    /// `(index, reason)` for every marker that did not make it into `citations`.
    pub dropped: Vec<(usize, DropReason)>,
}

/// Length in bytes of a `[k]` marker at the start of `s`, with its index.
fn marker_at(s: &str) -> Option<(usize, usize)> {
    let rest = s.strip_prefix('[')?;
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || rest.as_bytes().get(digits) != Some(&b']') {
        return None;
    }
    // Absurdly long digit runs saturate and are dropped as out of range.
    let k = rest[..digits].parse::<usize>().unwrap_or(usize::MAX);
    Some((digits + 2, k))
}

/// Removes every `[k]` marker from `sentence`, returning the cleaned text
/// and the first three distinct indices in `1..=max_index`.
pub fn extract_citations(sentence: &str, max_index: usize) -> Extraction {
    let mut text = String::with_capacity(sentence.len());
    let mut citations = Vec::new();
    let mut markers = Vec::new();
    let mut dropped = Vec::new();
    let mut pending_space = false;
    let mut removed_since_visible = false;

    let mut i = 0;
    while i < sentence.len() {
        let rest = &sentence[i..];
        if let Some((len, k)) = marker_at(rest) {
            markers.push(CitationMarker {
                offset: text.len(),
                raw: rest[..len].to_owned(),
            });
            if k == 0 || k > max_index {
                dropped.push((k, DropReason::OutOfRange));
            } else if citations.contains(&k) {
                dropped.push((k, DropReason::Duplicate));
            } else if citations.len() == MAX_CITATIONS {
                dropped.push((k, DropReason::OverCap));
            } else {
                citations.push(k);
            }
            removed_since_visible = true;
            i += len;
            continue;
        }
        let c = rest.chars().next().expect("non-empty remainder");
        i += c.len_utf8();
        if c.is_whitespace() {
            pending_space = !text.is_empty();
            continue;
        }
        if pending_space && !(removed_since_visible && TIGHT_PUNCT.contains(&c)) {
            text.push(' ');
        }
        pending_space = false;
        removed_since_visible = false;
        text.push(c);
    }

    Extraction {
        text,
        citations,
        markers,
        dropped,
    }
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['"', '\'', '(', '\u{201c}', '\u{2018}']);
    if word.is_empty() {
        return false;
    }
    if word.contains('.') {
        return true;
    }
    let mut chars = word.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_uppercase() {
            return true;
        }
    }
    ABBREVIATIONS.contains(&word.to_lowercase().as_str())
}

/// An ellipsis followed by a lowercase word continues the sentence.
fn trailing_off(run: &str, after: &str) -> bool {
    run.contains("...")
        && after.trim_start().chars().next().is_some_and(char::is_lowercase)
}

/// Splits prose into raw sentence spans, citation markers included.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().expect("non-empty remainder");
        if !TERMINATORS.contains(&c) {
            i += c.len_utf8();
            continue;
        }
        let mut j = i + c.len_utf8();
        while let Some(n) = text[j..].chars().next() {
            if TERMINATORS.contains(&n) || CLOSERS.contains(&n) {
                j += n.len_utf8();
            } else {
                break;
            }
        }
        let next = text[j..].chars().next();
        let at_boundary = match next {
            None => true,
            Some(n) if n.is_whitespace() => true,
            Some(_) => marker_at(&text[j..]).is_some(),
        };
        if !at_boundary
            || (c == '.' && j == i + 1 && is_abbreviation(&text[start..i]))
            || trailing_off(&text[i..j], &text[j..])
        {
            i = j;
            continue;
        }
        let mut end = j;
        let mut k = j;
        loop {
            let ws = text[k..].len() - text[k..].trim_start().len();
            if let Some((len, _)) = marker_at(&text[k + ws..]) {
                k += ws + len;
                end = k;
            } else {
                break;
            }
        }
        if !text[start..end].trim().is_empty() {
            out.push(&text[start..end]);
        }
        start = end;
        i = end;
    }
    if !text[start..].trim().is_empty() {
        out.push(&text[start..]);
    }
    out
}

/// Splits a QAMPARI answer list into entity spans.
pub fn split_list(text: &str) -> Vec<&str> {
    let body = text.trim();
    let body = body.strip_suffix('.').unwrap_or(body);
    body.split(',').filter(|p| !p.trim().is_empty()).collect()
}

/// Segments already-truncated output into statements.
pub fn segment_statements(truncated: &str, kind: DatasetKind, max_index: usize) -> ParsedResponse {
    segment_with_log(truncated, kind, max_index).0
}

pub fn segment_with_log(
    truncated: &str,
    kind: DatasetKind,
    max_index: usize,
) -> (ParsedResponse, Vec<DroppedCitation>) {
    let pieces = match kind {
        DatasetKind::Qampari => split_list(truncated),
        DatasetKind::Asqa | DatasetKind::Eli5 => split_sentences(truncated),
    };
    let mut statements = Vec::with_capacity(pieces.len());
    let mut log = Vec::new();
    for piece in pieces {
        let ex = extract_citations(piece, max_index);
        let statement_index = statements.len();
        if ex.text.is_empty() {
            log.extend(ex.markers.iter().filter_map(|m| {
                marker_at(&m.raw).map(|(_, k)| DroppedCitation {
                    statement_index,
                    dropped_index: k,
                    reason: DropReason::Orphaned,
                })
            }));
            continue;
        }
        log.extend(ex.dropped.iter().map(|&(k, reason)| DroppedCitation {
            statement_index,
            dropped_index: k,
            reason,
        }));
        statements.push(Statement {
            text: ex.text,
            citations: ex.citations,
            markers: ex.markers,
        });
    }
    for d in &log {
        log::debug!(
            "dropped citation [{}] in statement {}: {:?}",
            d.dropped_index,
            d.statement_index,
            d.reason
        );
    }
    (
        ParsedResponse {
            raw_text: truncated.to_owned(),
            statements,
        },
        log,
    )
}

/// Truncates then segments raw model output.
pub fn parse_response(raw: &str, kind: DatasetKind, max_index: usize) -> ParsedResponse {
    segment_statements(truncate_output(raw), kind, max_index)
}
