//! Domain dictionaries: concepts with variants compiled into a token trie.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{char_slice, tokenize, Sentence, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SemanticType {
    Component,
    Action,
    Observation,
    Location,
    Ordinal,
}

impl SemanticType {
    pub const ALL: [SemanticType; 5] = [
        SemanticType::Component,
        SemanticType::Action,
        SemanticType::Observation,
        SemanticType::Location,
        SemanticType::Ordinal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::Component => "Component",
            SemanticType::Action => "Action",
            SemanticType::Observation => "Observation",
            SemanticType::Location => "Location",
            SemanticType::Ordinal => "Ordinal",
        }
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SemanticType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown semantic type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Base,
    Rule,
    Qa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconConcept {
    pub canonical_uri: String,
    pub sem_type: SemanticType,
    pub preferred_label: String,
    pub variants: Vec<String>,
}

impl LexiconConcept {
    /// A concept whose variants are the preferred label followed by `others`.
    pub fn new<I, S>(uri: &str, sem_type: SemanticType, preferred: &str, others: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut variants = vec![preferred.to_string()];
        for v in others {
            let v = v.into();
            if !variants.iter().any(|e| normalize(e) == normalize(&v)) {
                variants.push(v);
            }
        }
        LexiconConcept {
            canonical_uri: uri.to_string(),
            sem_type,
            preferred_label: preferred.to_string(),
            variants,
        }
    }
}

/// A typed span of sentence text.
///
/// Serialized with the keys of the annotation file format (`text`, `start`,
/// `end`, `type`) so predictions can be scored directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    #[serde(rename = "text")]
    pub surface: String,
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub sem_type: SemanticType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_note: Option<String>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl EntityMention {
    /// A mention whose surface is the sentence slice `[start, end)`.
    pub fn from_span(
        sentence_text: &str,
        start: usize,
        end: usize,
        sem_type: SemanticType,
        provenance: Provenance,
    ) -> Self {
        EntityMention {
            surface: char_slice(sentence_text, start, end).to_string(),
            start,
            end,
            sem_type,
            canonical_uri: None,
            context_note: None,
            provenance,
            ordinal: None,
            location: None,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Canonical mention order: start ascending, longer first, then type and text.
pub fn sort_mentions(mentions: &mut [EntityMention]) {
    mentions.sort_by(|a, b| {
        (
            a.start,
            Reverse(a.len()),
            a.sem_type,
            &a.surface,
            &a.canonical_uri,
        )
            .cmp(&(
                b.start,
                Reverse(b.len()),
                b.sem_type,
                &b.surface,
                &b.canonical_uri,
            ))
    });
}

/// Lowercase and collapse runs of whitespace to a single space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The token sequence a variant is indexed under.
pub fn variant_key(variant: &str) -> Vec<String> {
    tokenize(&normalize(variant))
        .into_iter()
        .map(|t| t.text)
        .collect()
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<String, usize>,
    concepts: Vec<usize>,
}

/// Immutable matcher over a set of concepts.
#[derive(Debug, Clone)]
pub struct CompiledLexicon {
    concepts: Vec<LexiconConcept>,
    by_uri: BTreeMap<String, usize>,
    nodes: Vec<TrieNode>,
}

impl CompiledLexicon {
    pub fn empty() -> Self {
        CompiledLexicon {
            concepts: Vec::new(),
            by_uri: BTreeMap::new(),
            nodes: vec![TrieNode::default()],
        }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, uri: &str) -> Option<&LexiconConcept> {
        self.by_uri.get(uri).map(|&i| &self.concepts[i])
    }

    /// Concepts in canonical URI order.
    pub fn concepts(&self) -> impl Iterator<Item = &LexiconConcept> {
        self.by_uri.values().map(|&i| &self.concepts[i])
    }

    pub fn count_by_type(&self) -> BTreeMap<SemanticType, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.concepts {
            *counts.entry(c.sem_type).or_insert(0) += 1;
        }
        counts
    }

    /// Concepts indexed under exactly this (lowercase) token sequence.
    pub fn lookup_key<S: AsRef<str>>(&self, key: &[S]) -> impl Iterator<Item = &LexiconConcept> {
        let mut node = Some(0);
        for tok in key {
            node = node.and_then(|n| self.nodes[n].children.get(tok.as_ref()).copied());
        }
        node.into_iter()
            .flat_map(move |n| self.nodes[n].concepts.iter().map(|&c| &self.concepts[c]))
    }

    /// Every match starting at `tokens[from]`, as (token count, concept).
    pub fn matches_from<'a, S: AsRef<str>>(
        &'a self,
        tokens: &[S],
        from: usize,
    ) -> Vec<(usize, &'a LexiconConcept)> {
        let mut out = Vec::new();
        let mut node = 0;
        for (n, tok) in tokens[from..].iter().enumerate() {
            let key = tok.as_ref().to_lowercase();
            match self.nodes[node].children.get(&key) {
                Some(&next) => node = next,
                None => break,
            }
            out.extend(
                self.nodes[node]
                    .concepts
                    .iter()
                    .map(|&c| (n + 1, &self.concepts[c])),
            );
        }
        out
    }

    fn insert(&mut self, key: &[String], concept: usize) {
        let mut node = 0;
        for tok in key {
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let id = self.nodes.len() - 1;
                    self.nodes[node].children.insert(tok.clone(), id);
                    id
                }
            };
        }
        self.nodes[node].concepts.push(concept);
    }

    /// Canonical text form: the source format with concepts sorted by URI.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::from("# TYPE\tURI\tpreferred_label\tvariant...\n");
        for c in self.concepts() {
            out.push_str(c.sem_type.as_str());
            out.push('\t');
            out.push_str(&c.canonical_uri);
            out.push('\t');
            out.push_str(&c.preferred_label);
            for v in &c.variants {
                if normalize(v) != normalize(&c.preferred_label) {
                    out.push('\t');
                    out.push_str(v);
                }
            }
            out.push('\n');
        }
        out
    }
}

fn validate_concept(c: &LexiconConcept, problems: &mut Vec<String>) {
    let uri = &c.canonical_uri;
    if uri.trim().is_empty() {
        problems.push(format!("concept {:?} has an empty URI", c.preferred_label));
    }
    if c.sem_type == SemanticType::Ordinal {
        problems.push(format!(
            "{uri}: Ordinal concepts cannot be dictionary entries"
        ));
    }
    let mut seen = Vec::new();
    for v in &c.variants {
        let norm = normalize(v);
        if norm.is_empty() {
            problems.push(format!("{uri}: empty variant"));
        } else if seen.contains(&norm) {
            problems.push(format!("{uri}: duplicate variant {v:?}"));
        } else {
            seen.push(norm);
        }
    }
    if !seen.contains(&normalize(&c.preferred_label)) {
        problems.push(format!(
            "{uri}: preferred label {:?} missing from variants",
            c.preferred_label
        ));
    }
}

/// Validate concepts and build the token-sequence index.
///
/// Fails on duplicate URIs and on a variant shared by two concepts of the
/// same type. A variant shared across types is kept: both concepts match.
pub fn compile_lexicon(concepts: Vec<LexiconConcept>) -> Result<CompiledLexicon> {
    let mut problems = Vec::new();
    let mut lex = CompiledLexicon::empty();
    let mut dup_uris = Vec::new();

    for (i, c) in concepts.iter().enumerate() {
        validate_concept(c, &mut problems);
        if lex.by_uri.insert(c.canonical_uri.clone(), i).is_some()
            && !dup_uris.contains(&c.canonical_uri)
        {
            dup_uris.push(c.canonical_uri.clone());
        }
    }
    if !dup_uris.is_empty() {
        problems.push(format!("duplicate URIs: {}", dup_uris.join(", ")));
    }

    let mut owners: HashMap<(Vec<String>, SemanticType), usize> = HashMap::new();
    let mut keys: Vec<(Vec<String>, usize)> = Vec::new();
    for (i, c) in concepts.iter().enumerate() {
        let mut own_keys: Vec<Vec<String>> = Vec::new();
        for v in &c.variants {
            let key = variant_key(v);
            if key.is_empty() || own_keys.contains(&key) {
                continue;
            }
            own_keys.push(key.clone());
            match owners.get(&(key.clone(), c.sem_type)) {
                Some(&other) if concepts[other].canonical_uri != c.canonical_uri => {
                    problems.push(format!(
                        "variant {v:?} maps to two {} concepts: {} and {}",
                        c.sem_type, concepts[other].canonical_uri, c.canonical_uri
                    ));
                }
                _ => {
                    owners.insert((key.clone(), c.sem_type), i);
                    keys.push((key, i));
                }
            }
        }
    }

    if !problems.is_empty() {
        return Err(Error::Lexicon { problems });
    }
    lex.concepts = concepts;
    for (key, i) in &keys {
        lex.insert(key, *i);
    }
    Ok(lex)
}

/// Every token-aligned dictionary match in the sentence, nested and
/// overlapping ones included, in canonical mention order.
pub fn lookup_all(
    sentence: &Sentence,
    tokens: &[Token],
    lexicon: &CompiledLexicon,
) -> Vec<EntityMention> {
    let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for (n, concept) in lexicon.matches_from(&words, i) {
            let (start, end) = (tokens[i].start, tokens[i + n - 1].end);
            let mut m = EntityMention::from_span(
                &sentence.text,
                start,
                end,
                concept.sem_type,
                Provenance::Base,
            );
            m.canonical_uri = Some(concept.canonical_uri.clone());
            out.push(m);
        }
    }
    sort_mentions(&mut out);
    out
}

/// Tokenize and look up in one step.
pub fn annotate(sentence: &Sentence, lexicon: &CompiledLexicon) -> Vec<EntityMention> {
    lookup_all(sentence, &tokenize(&sentence.text), lexicon)
}

/// Parse the tab-separated lexicon source format.
///
/// `TYPE<TAB>URI<TAB>preferred_label<TAB>variant...`; `#` starts a comment
/// line. Problems are reported with 1-based line numbers.
pub fn parse_lexicon_text(text: &str) -> Result<Vec<LexiconConcept>> {
    let mut concepts = Vec::new();
    let mut problems = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            problems.push(format!(
                "line {line_no}: expected TYPE, URI and preferred label, found {} field(s)",
                fields.len()
            ));
            continue;
        }
        let sem_type = match fields[0].trim().parse::<SemanticType>() {
            Ok(SemanticType::Ordinal) | Err(_) => {
                problems.push(format!(
                    "line {line_no}: TYPE must be Component, Action, Observation or Location, found {:?}",
                    fields[0]
                ));
                continue;
            }
            Ok(t) => t,
        };
        let uri = fields[1].trim();
        let preferred = fields[2].trim();
        if uri.is_empty() || preferred.is_empty() {
            problems.push(format!("line {line_no}: empty URI or preferred label"));
            continue;
        }
        if let Some(pos) = fields[3..].iter().position(|v| v.trim().is_empty()) {
            problems.push(format!(
                "line {line_no}: empty variant in column {}",
                pos + 4
            ));
            continue;
        }
        concepts.push(LexiconConcept::new(
            uri,
            sem_type,
            preferred,
            fields[3..].iter().map(|v| v.trim().to_string()),
        ));
    }
    if problems.is_empty() {
        Ok(concepts)
    } else {
        Err(Error::Lexicon { problems })
    }
}

pub fn load_lexicon(path: &std::path::Path) -> Result<CompiledLexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    compile_lexicon(parse_lexicon_text(&text)?)
}
