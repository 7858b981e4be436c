//! Maintenance records, sentence splitting and tokenization.
//!
//! Every offset in this crate counts Unicode scalar values, not bytes.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokens that keep a trailing period and never end a sentence.
pub const ABBREVIATIONS: &[&str] = &["no.", "ref.", "apprx."];

const SENTENCE_TERMINATORS: &[char] = &['.', ';', '!', '?'];
const CONNECTORS: &[char] = &['#', '/', '.', '-'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceRecordDoc {
    pub record_id: String,
    pub asset_id: String,
    pub date_performed: String,
    pub text: String,
}

impl MaintenanceRecordDoc {
    pub fn sentences(&self) -> Vec<Sentence> {
        split_sentences(&self.text)
            .into_iter()
            .map(|mut s| {
                s.parent_record_id.clone_from(&self.record_id);
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub parent_record_id: String,
    pub index: usize,
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
}

impl Sentence {
    /// Builds a standalone sentence (no parent paragraph) over `text`.
    pub fn standalone(text: impl Into<String>) -> Self {
        let text = text.into();
        let len = char_len(&text);
        Sentence {
            parent_record_id: String::new(),
            index: 0,
            text,
            start_offset: 0,
            end_offset: len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by character offsets `[start, end)`.
///
/// Offsets past the end are clamped.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(i, _)| i).chain([text.len()]);
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        from
    };
    &text[from..to]
}

pub fn is_abbreviation(word: &str) -> bool {
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Whether the period at `chars[dot]` closes one of [`ABBREVIATIONS`].
fn period_ends_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut begin = dot;
    while begin > 0 && chars[begin - 1].is_alphabetic() {
        begin -= 1;
    }
    if begin == dot || (begin > 0 && chars[begin - 1].is_alphanumeric()) {
        return false;
    }
    let word: String = chars[begin..=dot].iter().collect();
    is_abbreviation(&word)
}

/// Split a record paragraph into sentences.
///
/// Boundaries are `.`, `;`, `!` and `?` when followed by whitespace or the
/// end of the text, plus every newline. A period closing a known
/// abbreviation or sitting between digits is not a boundary. Terminating
/// punctuation belongs to the sentence it closes; surrounding whitespace
/// belongs to no sentence.
pub fn split_sentences(paragraph: &str) -> Vec<Sentence> {
    let chars: Vec<char> = paragraph.chars().collect();
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;

    let close = |spans: &mut Vec<(usize, usize)>, start: usize, end: usize| {
        let mut end = end;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > start {
            spans.push((start, end));
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            if let Some(start) = open.take() {
                close(&mut spans, start, i);
            }
            continue;
        }
        if open.is_none() && !c.is_whitespace() {
            open = Some(i);
        }
        if !SENTENCE_TERMINATORS.contains(&c) {
            continue;
        }
        let next = chars.get(i + 1);
        if next.is_some_and(|n| !n.is_whitespace()) {
            continue;
        }
        if c == '.' {
            let between_digits =
                i > 0 && chars[i - 1].is_ascii_digit() && next.is_some_and(|n| n.is_ascii_digit());
            if between_digits || period_ends_abbreviation(&chars, i) {
                continue;
            }
        }
        if let Some(start) = open.take() {
            close(&mut spans, start, i + 1);
        }
    }
    if let Some(start) = open {
        close(&mut spans, start, chars.len());
    }

    spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Sentence {
            parent_record_id: String::new(),
            index,
            text: chars[start..end].iter().collect(),
            start_offset: start,
            end_offset: end,
        })
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn joins_word(chars: &[char], i: usize) -> bool {
    is_word_char(chars[i])
        || (CONNECTORS.contains(&chars[i]) && chars.get(i + 1).is_some_and(|&n| is_word_char(n)))
}

/// Split text into word and punctuation tokens.
///
/// A word is a maximal run of alphanumerics, also absorbing `#`, `/`, `.`
/// and `-` when they precede an alphanumeric ("#4", "r/h", "3.5"). A
/// trailing period is kept only when it completes an abbreviation ("no.").
/// Any other non-whitespace character is a token by itself.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if joins_word(&chars, i) {
            while i < chars.len() && joins_word(&chars, i) {
                i += 1;
            }
            if chars.get(i) == Some(&'.') {
                let mut word: String = chars[start..i].iter().collect();
                word.push('.');
                if is_abbreviation(&word) {
                    i += 1;
                }
            }
        } else {
            i += 1;
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            start,
            end: i,
        });
    }
    tokens
}

#[derive(Deserialize)]
struct RawRecord {
    record_id: Option<String>,
    asset_id: Option<String>,
    date: Option<String>,
    text: Option<String>,
}

/// Parse one JSON Lines record. `line` is 1-based and only used in errors.
pub fn parse_record_line(raw: &str, line: usize) -> Result<MaintenanceRecordDoc> {
    let rec: RawRecord =
        serde_json::from_str(raw).map_err(|e| Error::parse(line, e.to_string()))?;
    let record_id = rec
        .record_id
        .ok_or_else(|| Error::parse(line, "missing \"record_id\""))?;
    let text = rec
        .text
        .ok_or_else(|| Error::parse(line, "missing \"text\""))?;
    if record_id.is_empty() {
        return Err(Error::parse(line, "empty \"record_id\""));
    }
    if text.trim().is_empty() {
        return Err(Error::parse(
            line,
            format!("record {record_id}: empty text"),
        ));
    }
    Ok(MaintenanceRecordDoc {
        record_id,
        asset_id: rec.asset_id.unwrap_or_default(),
        date_performed: rec.date.unwrap_or_default(),
        text,
    })
}

/// Records read from a JSON Lines stream, plus the lines that were rejected.
#[derive(Debug, Default)]
pub struct RecordBatch {
    pub records: Vec<MaintenanceRecordDoc>,
    pub rejected: Vec<Error>,
}

pub fn read_records<R: BufRead>(reader: R) -> Result<RecordBatch> {
    let mut batch = RecordBatch::default();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(&line, line_no) {
            Ok(doc) if !seen.insert(doc.record_id.clone()) => batch.rejected.push(Error::parse(
                line_no,
                format!("duplicate record_id {:?}", doc.record_id),
            )),
            Ok(doc) => batch.records.push(doc),
            Err(e) => batch.rejected.push(e),
        }
    }
    Ok(batch)
}
