//! Candidate generation: rule-based sentence segmentation with cross-document
//! deduplication, plus import of externally generated candidates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SubmissionGroup;
use crate::text::{char_len, dedup_key};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("imported candidate for {0:?} has empty text")]
    EmptyImport(String),
    #[error("submission {0:?} has no documents")]
    EmptyGroup(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    /// Abbreviations whose final period never ends a sentence. Matched case-insensitively.
    pub abbreviation_list: Vec<String>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            min_chars: 20,
            max_chars: 500,
            abbreviation_list: DEFAULT_ABBREVIATIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "et al.", "fig.", "figs.", "eq.", "eqs.", "sec.", "tab.", "cf.", "vs.",
    "resp.", "w.r.t.", "approx.",
];

/// Where a candidate occurs. Offsets are in characters, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub doc_index: usize,
    pub start: usize,
    pub end: usize,
    /// Set for imported candidates, whose span is the whole document rather than the text itself.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub imported: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub text: String,
    pub sources: Vec<SourceSpan>,
    pub length_chars: usize,
}

impl Candidate {
    pub fn has_source(&self, doc_index: usize) -> bool {
        self.sources.iter().any(|s| s.doc_index == doc_index)
    }

    /// First span of this candidate inside `doc_index`, if any.
    pub fn span_in(&self, doc_index: usize) -> Option<&SourceSpan> {
        self.sources.iter().find(|s| s.doc_index == doc_index)
    }

    pub fn is_extractive(&self) -> bool {
        self.sources.iter().all(|s| !s.imported)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.candidates.iter().map(|c| c.id.clone()).collect()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.length_chars).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }
}

/// Accumulates candidates in first-occurrence order, merging identical normalized texts.
#[derive(Default)]
struct Deduper {
    set: CandidateSet,
    by_key: HashMap<String, usize>,
}

impl Deduper {
    fn add(&mut self, text: &str, span: SourceSpan) -> bool {
        let key = dedup_key(text);
        if key.is_empty() {
            return false;
        }
        match self.by_key.get(&key) {
            Some(&k) => self.set.candidates[k].sources.push(span),
            None => {
                let k = self.set.candidates.len();
                self.by_key.insert(key, k);
                self.set.candidates.push(Candidate {
                    id: format!("c{k}"),
                    text: text.to_string(),
                    sources: vec![span],
                    length_chars: char_len(text),
                });
            }
        }
        true
    }
}

pub fn extract_candidates(
    group: &SubmissionGroup,
    config: &SegmenterConfig,
) -> Result<CandidateSet, SegmentError> {
    if group.is_empty() {
        return Err(SegmentError::EmptyGroup(group.submission_id.clone()));
    }
    let abbreviations: Vec<Vec<char>> = config
        .abbreviation_list
        .iter()
        .map(|a| a.to_lowercase().chars().collect())
        .collect();

    let mut dedup = Deduper::default();
    for doc in &group.documents {
        let chars: Vec<char> = doc.text.chars().collect();
        let mut kept = 0;
        for (start, end) in split_sentences(&chars, &abbreviations) {
            let len = end - start;
            if len < config.min_chars || len > config.max_chars {
                continue;
            }
            let text: String = chars[start..end].iter().collect();
            let span = SourceSpan {
                doc_index: doc.index,
                start,
                end,
                imported: false,
            };
            if dedup.add(&text, span) {
                kept += 1;
            }
        }
        if kept == 0 {
            dedup
                .set
                .warnings
                .push(format!("document {:?} yielded no candidates", doc.id));
        }
    }
    Ok(dedup.set)
}

/// Candidates produced elsewhere (for example by an abstractive model), attached
/// to the document they were generated for.
pub fn import_candidates<S: AsRef<str>>(
    group: &SubmissionGroup,
    records: &[(S, S)],
) -> Result<CandidateSet, SegmentError> {
    let mut dedup = Deduper::default();
    for (doc_id, text) in records {
        let doc_id = doc_id.as_ref();
        let doc = group
            .documents
            .iter()
            .find(|d| d.id == doc_id)
            .ok_or_else(|| SegmentError::UnknownDocument(doc_id.to_string()))?;
        let text = crate::text::nfc(text.as_ref().trim());
        let span = SourceSpan {
            doc_index: doc.index,
            start: 0,
            end: char_len(&doc.text),
            imported: true,
        };
        if !dedup.add(&text, span) {
            return Err(SegmentError::EmptyImport(doc_id.to_string()));
        }
    }
    Ok(dedup.set)
}

/// Sentence spans `(start, end)` in character offsets, in text order, with
/// list/quote markers and surrounding whitespace excluded.
pub fn split_sentences(chars: &[char], abbreviations: &[Vec<char>]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    for (block_start, block_end) in blocks(chars) {
        let mut pos = skip_markers(chars, block_start, block_end);
        let mut sentence_start = pos;
        while pos < block_end {
            let c = chars[pos];
            if matches!(c, '.' | '!' | '?') {
                let mut end = pos + 1;
                while end < block_end && matches!(chars[end], '.' | '!' | '?') {
                    end += 1;
                }
                while end < block_end && is_closer(chars[end]) {
                    end += 1;
                }
                let at_break = end == block_end || chars[end].is_whitespace();
                let protected = c == '.'
                    && end - pos == 1
                    && end < block_end
                    && (is_abbreviation(chars, sentence_start, pos, abbreviations)
                        || is_initial(chars, sentence_start, pos, end, block_end));
                if at_break && !protected {
                    push_trimmed(&mut spans, chars, sentence_start, end);
                    sentence_start = end;
                }
                pos = end;
            } else {
                pos += 1;
            }
        }
        push_trimmed(&mut spans, chars, sentence_start, block_end);
    }
    spans
}

fn push_trimmed(spans: &mut Vec<(usize, usize)>, chars: &[char], mut start: usize, mut end: usize) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start < end {
        spans.push((start, end));
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Split the text at blank lines and at lines that open a list item, heading or quote.
fn blocks(chars: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut block_start = 0;
    let mut line_start = 0;
    let mut prev_quoted = false;
    let mut i = 0;
    while i <= chars.len() {
        if i == chars.len() || chars[i] == '\n' {
            let line = &chars[line_start..i];
            let first = line.iter().position(|c| !c.is_whitespace());
            let starts_new = match first {
                None => true,
                Some(f) => {
                    let quoted = line[f] == '>';
                    let opens = (quoted && !prev_quoted) || marker_len(line, f) > 0 && !quoted;
                    prev_quoted = quoted;
                    opens
                }
            };
            if first.is_none() {
                prev_quoted = false;
            }
            if starts_new && line_start > block_start {
                out.push((block_start, line_start));
                block_start = line_start;
            }
            line_start = i + 1;
        }
        i += 1;
    }
    if block_start < chars.len() {
        out.push((block_start, chars.len()));
    }
    out
}

/// Length of a list/quote/heading marker at `at` (including its trailing whitespace), or 0.
fn marker_len(chars: &[char], at: usize) -> usize {
    let rest = &chars[at..];
    let followed_by_space = |n: usize| rest.get(n).is_some_and(|c| c.is_whitespace());
    match rest.first() {
        Some('>') => 1,
        Some('*' | '-' | '+' | '\u{2022}') if followed_by_space(1) => 2,
        Some('#') => {
            let hashes = rest.iter().take_while(|&&c| c == '#').count();
            if followed_by_space(hashes) {
                hashes + 1
            } else {
                0
            }
        }
        Some(c) if c.is_ascii_digit() => {
            let digits = rest.iter().take_while(|c| c.is_ascii_digit()).count();
            if matches!(rest.get(digits), Some('.' | ')')) && followed_by_space(digits + 1) {
                digits + 2
            } else {
                0
            }
        }
        _ => 0,
    }
}

fn skip_markers(chars: &[char], mut pos: usize, end: usize) -> usize {
    loop {
        while pos < end && chars[pos].is_whitespace() {
            pos += 1;
        }
        if pos >= end {
            return pos;
        }
        let n = marker_len(&chars[..end], pos);
        if n == 0 {
            return pos;
        }
        pos += n;
    }
}

/// Does the text ending at the period `dot` end with a protected abbreviation?
fn is_abbreviation(chars: &[char], floor: usize, dot: usize, abbreviations: &[Vec<char>]) -> bool {
    abbreviations.iter().any(|abbr| {
        let n = abbr.len();
        if n == 0 || dot + 1 < floor + n {
            return false;
        }
        let start = dot + 1 - n;
        let matches = chars[start..=dot]
            .iter()
            .zip(abbr)
            .all(|(a, b)| a.to_lowercase().eq(std::iter::once(*b)));
        matches && (start == floor || !chars[start - 1].is_alphanumeric())
    })
}

/// A single capital letter followed by a period and then a capitalized word
/// (a name initial such as "J. Smith"). A following initial does not count,
/// so "A. B. C." still splits into three sentences.
fn is_initial(chars: &[char], floor: usize, dot: usize, after: usize, end: usize) -> bool {
    if dot == floor || !chars[dot - 1].is_uppercase() {
        return false;
    }
    if dot - 1 > floor && chars[dot - 2].is_alphanumeric() {
        return false;
    }
    let mut next = after;
    while next < end && chars[next].is_whitespace() {
        next += 1;
    }
    if next >= end || !chars[next].is_uppercase() {
        return false;
    }
    let word_len = chars[next..end]
        .iter()
        .take_while(|c| c.is_alphanumeric())
        .count();
    let next_is_initial = word_len == 1 && chars.get(next + 1) == Some(&'.');
    !next_is_initial
}
