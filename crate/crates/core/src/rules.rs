//! Rule cascade over dictionary mentions.
//!
//! Order: prune same-start nests, join same-type neighbours (locations
//! first, then set aside), capture short gaps as typical-part context,
//! strip stop words, link components to actions and observations, then
//! pull ordinals and locations out of component names.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{char_slice, tokenize, Token};
use crate::diagnostics::Diagnostic;
use crate::error::Result;
use crate::lexicon::{sort_mentions, CompiledLexicon, EntityMention, Provenance, SemanticType};

pub const DEFAULT_K: usize = 10;

pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "an", "the", "of", "to", "in", "on", "at", "for", "and", "or", "is", "was", "were", "be",
    "been", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalPattern {
    /// `#4`
    Hash,
    /// `no. 4`
    NoDot,
    /// `no 4`
    No,
    /// `4th`, `1st`, `2nd`, `3rd`
    Suffix,
}

pub const DEFAULT_ORDINAL_PATTERNS: [OrdinalPattern; 4] = [
    OrdinalPattern::Hash,
    OrdinalPattern::NoDot,
    OrdinalPattern::No,
    OrdinalPattern::Suffix,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Maximum character gap between two mentions for capture and linking.
    pub k: usize,
    pub stop_words: BTreeSet<String>,
    pub ordinal_patterns: Vec<OrdinalPattern>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            k: DEFAULT_K,
            stop_words: DEFAULT_STOP_WORDS.iter().map(|s| s.to_string()).collect(),
            ordinal_patterns: DEFAULT_ORDINAL_PATTERNS.to_vec(),
        }
    }
}

impl RuleConfig {
    pub fn with_k(k: usize) -> Self {
        RuleConfig {
            k,
            ..Default::default()
        }
    }

    /// Load `{"k": int, "stop_words": [..]}`; absent fields take defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: RuleConfig = serde_json::from_str(text)?;
        cfg.stop_words = cfg.stop_words.iter().map(|w| w.to_lowercase()).collect();
        Ok(cfg)
    }

    pub fn is_stop_word(&self, word: &str) -> bool {
        self.stop_words.contains(&word.to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    #[serde(rename = "hasAssociatedAction")]
    HasAssociatedAction,
    #[serde(rename = "hasAssociatedObservation")]
    HasAssociatedObservation,
}

impl Predicate {
    /// The predicate linking a component to a mention of type `object`.
    pub fn for_object(object: SemanticType) -> Option<Predicate> {
        match object {
            SemanticType::Action => Some(Predicate::HasAssociatedAction),
            SemanticType::Observation => Some(Predicate::HasAssociatedObservation),
            _ => None,
        }
    }

    pub fn local_name(self) -> &'static str {
        match self {
            Predicate::HasAssociatedAction => "hasAssociatedAction",
            Predicate::HasAssociatedObservation => "hasAssociatedObservation",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.local_name())
    }
}

/// Component-to-action/observation link. `subject` and `object` index the
/// mention list the relation was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub subject: usize,
    pub predicate: Predicate,
    pub object: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalValue {
    pub value: u64,
    /// Character span of the ordinal inside the component string.
    pub source_span: (usize, usize),
}

/// Mentions and relations for one sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<Relation>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

fn is_linkable(t: SemanticType) -> bool {
    matches!(
        t,
        SemanticType::Component | SemanticType::Action | SemanticType::Observation
    )
}

/// Keep only the longest mention per (start, type).
pub fn prune_to_finest(mentions: Vec<EntityMention>) -> Vec<EntityMention> {
    let mut longest: HashMap<(usize, SemanticType), usize> = HashMap::new();
    for m in &mentions {
        let e = longest.entry((m.start, m.sem_type)).or_insert(0);
        *e = (*e).max(m.len());
    }
    let mut kept = BTreeSet::new();
    mentions
        .into_iter()
        .filter(|m| {
            longest[&(m.start, m.sem_type)] == m.len() && kept.insert((m.start, m.sem_type))
        })
        .collect()
}

fn whitespace_between(text: &str, from: usize, to: usize) -> bool {
    char_slice(text, from, to).chars().all(char::is_whitespace)
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = i;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Merge same-type mentions of one type that are separated only by
/// whitespace. Chains collapse to one mention covering the union of their
/// spans; nested mentions joined from either side are absorbed.
fn join_group(group: Vec<EntityMention>, text: &str) -> Vec<EntityMention> {
    let n = group.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in 0..n {
            if a != b
                && group[a].end <= group[b].start
                && whitespace_between(text, group[a].end, group[b].start)
            {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        members.entry(find(&mut parent, i)).or_default().push(i);
    }
    let mut out = Vec::new();
    for (_, ids) in members {
        if ids.len() == 1 {
            out.push(group[ids[0]].clone());
            continue;
        }
        let start = ids.iter().map(|&i| group[i].start).min().unwrap_or(0);
        let end = ids.iter().map(|&i| group[i].end).max().unwrap_or(0);
        out.push(EntityMention::from_span(
            text,
            start,
            end,
            group[ids[0]].sem_type,
            Provenance::Rule,
        ));
    }
    out
}

/// Join whitespace-adjacent mentions of the same type, locations first.
pub fn join_same_type(
    mentions: Vec<EntityMention>,
    sentence_text: &str,
    _config: &RuleConfig,
) -> Vec<EntityMention> {
    let (locations, rest): (Vec<_>, Vec<_>) = mentions
        .into_iter()
        .partition(|m| m.sem_type == SemanticType::Location);
    let mut out = join_group(locations, sentence_text);
    let mut by_type: HashMap<SemanticType, Vec<EntityMention>> = HashMap::new();
    for m in rest {
        by_type.entry(m.sem_type).or_default().push(m);
    }
    for group in by_type.into_values() {
        out.extend(join_group(group, sentence_text));
    }
    sort_mentions(&mut out);
    out
}

fn is_punctuation(token: &Token) -> bool {
    !token.text.chars().any(char::is_alphanumeric)
}

/// Capture short gaps in front of components as parenthesized context.
///
/// Each component looks left to the nearest Component/Action/Observation
/// mention ending before it. If the gap is 1..=k characters and holds no
/// punctuation, its non-stop-word tokens become the context note and the
/// component span grows to cover the gap text. Locations pass through.
pub fn absorb_context_gap(
    mentions: Vec<EntityMention>,
    sentence_text: &str,
    config: &RuleConfig,
) -> Vec<EntityMention> {
    let snapshot = mentions.clone();
    let mut out = mentions;
    for (i, m) in out.iter_mut().enumerate() {
        if m.sem_type != SemanticType::Component {
            continue;
        }
        let partner_end = snapshot
            .iter()
            .enumerate()
            .filter(|&(j, p)| j != i && is_linkable(p.sem_type) && p.end <= m.start)
            .map(|(_, p)| p.end)
            .max();
        let Some(gap_start) = partner_end else {
            continue;
        };
        let gap = m.start - gap_start;
        if gap == 0 || gap > config.k {
            continue;
        }
        let gap_tokens = tokenize(char_slice(sentence_text, gap_start, m.start));
        if gap_tokens.is_empty() || gap_tokens.iter().any(is_punctuation) {
            continue;
        }
        let content: Vec<String> = gap_tokens
            .iter()
            .filter(|t| !config.is_stop_word(&t.text))
            .map(|t| t.text.to_lowercase())
            .collect();
        m.start = gap_start + gap_tokens[0].start;
        m.provenance = Provenance::Rule;
        if !content.is_empty() {
            let note = format!("({})", content.join(" "));
            m.surface = format!("{note} {}", m.surface);
            m.context_note = Some(note);
        }
    }
    out
}

/// Rebuild text from a subset of its tokens, separating tokens that were
/// not directly adjacent in the original with a single space.
fn rejoin(tokens: &[&Token]) -> String {
    let mut out = String::new();
    let mut prev_end = None;
    for t in tokens {
        if prev_end.is_some_and(|e| t.start > e) {
            out.push(' ');
        }
        out.push_str(&t.text);
        prev_end = Some(t.end);
    }
    out
}

/// Remove stop-word tokens from the surface. `None` when nothing remains.
pub fn strip_stopwords(mention: EntityMention, config: &RuleConfig) -> Option<EntityMention> {
    let tokens = tokenize(&mention.surface);
    let kept: Vec<&Token> = tokens
        .iter()
        .filter(|t| !config.is_stop_word(&t.text))
        .collect();
    if kept.is_empty() {
        return None;
    }
    if kept.len() == tokens.len() {
        return Some(mention);
    }
    let mut m = mention;
    m.surface = rejoin(&kept);
    m.provenance = Provenance::Rule;
    Some(m)
}

/// Character distance between two disjoint spans; `None` when they overlap.
fn span_gap(a: &EntityMention, b: &EntityMention) -> Option<usize> {
    if a.end <= b.start {
        Some(b.start - a.end)
    } else if b.end <= a.start {
        Some(a.start - b.end)
    } else {
        None
    }
}

/// Link every component to every action/observation within `k` characters,
/// on either side. Overlapping spans are never linked.
pub fn extract_relations(mentions: &[EntityMention], config: &RuleConfig) -> Vec<Relation> {
    let mut out = Vec::new();
    for (s, subj) in mentions.iter().enumerate() {
        if subj.sem_type != SemanticType::Component {
            continue;
        }
        for (o, obj) in mentions.iter().enumerate() {
            let Some(predicate) = Predicate::for_object(obj.sem_type) else {
                continue;
            };
            if span_gap(subj, obj).is_some_and(|g| g <= config.k) {
                out.push(Relation {
                    subject: s,
                    predicate,
                    object: o,
                });
            }
        }
    }
    sort_relations(&mut out, mentions);
    out
}

pub(crate) fn sort_relations(relations: &mut Vec<Relation>, mentions: &[EntityMention]) {
    relations.sort_by_key(|r| {
        (
            mentions[r.subject].start,
            mentions[r.object].start,
            r.subject,
            r.object,
            r.predicate,
        )
    });
    relations.dedup();
}

/// The first ordinal in a component string, and the string without it.
pub fn extract_ordinal(component_surface: &str) -> Option<(OrdinalValue, String)> {
    scan_ordinal(component_surface, &DEFAULT_ORDINAL_PATTERNS).0
}

fn digits(s: &str) -> Option<&str> {
    (!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())).then_some(s)
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    s.get(..prefix.len())
        .filter(|p| p.eq_ignore_ascii_case(prefix))
        .map(|_| &s[prefix.len()..])
}

/// Candidate ordinal at token `i`: (number text, token count).
fn ordinal_at<'a>(
    tokens: &'a [Token],
    i: usize,
    patterns: &[OrdinalPattern],
) -> Option<(&'a str, usize)> {
    let tok = tokens[i].text.as_str();
    let next = tokens.get(i + 1).map(|t| t.text.as_str());
    for p in patterns {
        let hit = match p {
            OrdinalPattern::Hash => tok.strip_prefix('#').and_then(digits).map(|d| (d, 1)),
            OrdinalPattern::NoDot => strip_prefix_ci(tok, "no.")
                .and_then(digits)
                .map(|d| (d, 1))
                .or_else(|| {
                    tok.eq_ignore_ascii_case("no.")
                        .then_some(next)
                        .flatten()
                        .and_then(digits)
                        .map(|d| (d, 2))
                }),
            OrdinalPattern::No => tok
                .eq_ignore_ascii_case("no")
                .then_some(next)
                .flatten()
                .and_then(digits)
                .map(|d| (d, 2)),
            OrdinalPattern::Suffix => {
                let lower = tok.to_ascii_lowercase();
                ["st", "nd", "rd", "th"]
                    .iter()
                    .find_map(|sfx| lower.strip_suffix(sfx))
                    .and_then(digits)
                    .map(|d| (&tok[..d.len()], 1))
            }
        };
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Scan for the first valid ordinal; later ones and unparsable numbers are
/// reported as diagnostics.
pub fn scan_ordinal(
    component_surface: &str,
    patterns: &[OrdinalPattern],
) -> (Option<(OrdinalValue, String)>, Vec<Diagnostic>) {
    let tokens = tokenize(component_surface);
    let mut diagnostics = Vec::new();
    let mut found: Option<(OrdinalValue, usize, usize)> = None;
    let mut i = 0;
    while i < tokens.len() {
        let Some((number, width)) = ordinal_at(&tokens, i, patterns) else {
            i += 1;
            continue;
        };
        let span = (tokens[i].start, tokens[i + width - 1].end);
        let text = char_slice(component_surface, span.0, span.1);
        match number.parse::<u64>() {
            Err(_) => diagnostics.push(Diagnostic::warning(format!(
                "ordinal {text:?} in {component_surface:?} overflows; skipped"
            ))),
            Ok(0) => diagnostics.push(Diagnostic::info(format!(
                "ordinal {text:?} in {component_surface:?} is not positive; skipped"
            ))),
            Ok(value) if found.is_none() => {
                found = Some((
                    OrdinalValue {
                        value,
                        source_span: span,
                    },
                    i,
                    width,
                ))
            }
            Ok(_) => diagnostics.push(Diagnostic::warning(format!(
                "extra ordinal {text:?} in {component_surface:?} ignored"
            ))),
        }
        i += width;
    }
    let result = found.map(|(value, at, width)| {
        let kept: Vec<&Token> = tokens
            .iter()
            .enumerate()
            .filter(|(j, _)| *j < at || *j >= at + width)
            .map(|(_, t)| t)
            .collect();
        (value, rejoin(&kept))
    });
    (result, diagnostics)
}

fn location_match_from(tokens: &[&str], from: usize, lexicon: &CompiledLexicon) -> usize {
    lexicon
        .matches_from(tokens, from)
        .into_iter()
        .filter(|(_, c)| c.sem_type == SemanticType::Location)
        .map(|(n, _)| n)
        .max()
        .unwrap_or(0)
}

fn location_match_to(tokens: &[&str], to: usize, floor: usize, lexicon: &CompiledLexicon) -> usize {
    (floor..to)
        .find(|&s| {
            let key: Vec<String> = tokens[s..to].iter().map(|t| t.to_lowercase()).collect();
            lexicon
                .lookup_key(&key)
                .any(|c| c.sem_type == SemanticType::Location)
        })
        .map_or(0, |s| to - s)
}

/// Token ranges of the leading and trailing location runs.
fn location_runs(tokens: &[Token], lexicon: &CompiledLexicon) -> (usize, usize) {
    let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let mut prefix = 0;
    loop {
        let n = location_match_from(&words, prefix, lexicon);
        if n == 0 {
            break;
        }
        prefix += n;
    }
    let mut suffix_start = words.len();
    loop {
        let n = location_match_to(&words, suffix_start, prefix, lexicon);
        if n == 0 {
            break;
        }
        suffix_start -= n;
    }
    (prefix, suffix_start)
}

/// Split leading and trailing location words off a component string.
///
/// Returns the location text (prefix and suffix runs joined by a space)
/// and the residual component text, which is empty when the whole string
/// is a location.
pub fn split_location(
    component_surface: &str,
    lexicon: &CompiledLexicon,
) -> (Option<String>, String) {
    let tokens = tokenize(component_surface);
    let (prefix, suffix_start) = location_runs(&tokens, lexicon);
    let refs: Vec<&Token> = tokens.iter().collect();
    let residual = rejoin(&refs[prefix..suffix_start]);
    let parts: Vec<String> = [rejoin(&refs[..prefix]), rejoin(&refs[suffix_start..])]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        (None, residual)
    } else {
        (Some(parts.join(" ")), residual)
    }
}

/// Find `needle` as a case-insensitive token run inside `[start, end)` of
/// the sentence; returns its character span.
fn locate_tokens(text: &str, start: usize, end: usize, needle: &str) -> Option<(usize, usize)> {
    let want: Vec<String> = tokenize(needle)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect();
    if want.is_empty() {
        return None;
    }
    let have: Vec<Token> = tokenize(char_slice(text, start, end));
    have.windows(want.len())
        .find(|w| {
            w.iter()
                .zip(&want)
                .all(|(t, s)| t.text.to_lowercase() == *s)
        })
        .map(|w| (start + w[0].start, start + w[w.len() - 1].end))
}

/// Shrink `m`'s span when `piece` sits at its leading or trailing edge.
fn narrow_span(m: &mut EntityMention, text: &str, piece: (usize, usize)) {
    let inside: Vec<Token> = tokenize(char_slice(text, m.start, m.end))
        .into_iter()
        .map(|t| Token {
            start: t.start + m.start,
            end: t.end + m.start,
            ..t
        })
        .collect();
    let before: Vec<&Token> = inside.iter().filter(|t| t.end <= piece.0).collect();
    let after: Vec<&Token> = inside.iter().filter(|t| t.start >= piece.1).collect();
    if before.is_empty() {
        if let Some(first) = after.first() {
            m.start = first.start;
        }
    } else if after.is_empty() {
        if let Some(last) = before.last() {
            m.end = last.end;
        }
    }
}

/// Split a component surface into its context-note content and its name.
fn split_note(component: &EntityMention) -> (String, String) {
    if let Some(note) = &component.context_note {
        if let Some(name) = component.surface.strip_prefix(note.as_str()) {
            let inner = note.trim_start_matches('(').trim_end_matches(')');
            return (inner.to_string(), name.trim_start().to_string());
        }
    }
    (String::new(), component.surface.clone())
}

fn set_surface(component: &mut EntityMention, note_inner: &str, name: &str) {
    if note_inner.is_empty() {
        component.context_note = None;
        component.surface = name.to_string();
    } else {
        let note = format!("({note_inner})");
        component.surface = if name.is_empty() {
            String::new()
        } else {
            format!("{note} {name}")
        };
        component.context_note = Some(note);
    }
}

/// Ordinal and location post-processing of one component.
///
/// The ordinal is looked for in the context note first, then in the name;
/// locations are split off the name only. Returns the updated component
/// (`None` if nothing but location words remained) and the Ordinal and
/// Location mentions found inside it.
pub fn finish_component(
    mut component: EntityMention,
    sentence_text: &str,
    lexicon: &CompiledLexicon,
    config: &RuleConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> (Option<EntityMention>, Vec<EntityMention>) {
    let mut derived = Vec::new();
    let provenance = match component.provenance {
        Provenance::Base => Provenance::Rule,
        p => p,
    };
    let (mut note_inner, mut name) = split_note(&component);

    let mut ordinal_text = None;
    for in_note in [true, false] {
        let part = if in_note { &mut note_inner } else { &mut name };
        if part.is_empty() {
            continue;
        }
        let (hit, diags) = scan_ordinal(part, &config.ordinal_patterns);
        diagnostics.extend(diags);
        if let Some((value, cleaned)) = hit {
            ordinal_text =
                Some(char_slice(part, value.source_span.0, value.source_span.1).to_string());
            component.ordinal = Some(value.value);
            *part = cleaned;
            break;
        }
    }
    if let Some(text) = ordinal_text {
        if let Some(span) = locate_tokens(sentence_text, component.start, component.end, &text) {
            derived.push(EntityMention::from_span(
                sentence_text,
                span.0,
                span.1,
                SemanticType::Ordinal,
                provenance,
            ));
            narrow_span(&mut component, sentence_text, span);
        }
        component.provenance = provenance;
    }

    let (location, residual) = split_location(&name, lexicon);
    if let Some(location) = location {
        if let Some(span) = locate_tokens(sentence_text, component.start, component.end, &location)
        {
            derived.push(EntityMention::from_span(
                sentence_text,
                span.0,
                span.1,
                SemanticType::Location,
                provenance,
            ));
            narrow_span(&mut component, sentence_text, span);
        }
        component.location = Some(location);
        component.provenance = provenance;
        name = residual;
    }
    set_surface(&mut component, &note_inner, &name);

    if component.surface.is_empty() {
        diagnostics.push(Diagnostic::info(format!(
            "component at [{}, {}) reduced to nothing; dropped",
            component.start, component.end
        )));
        return (None, derived);
    }
    (Some(component), derived)
}

/// Sort mentions canonically and rewrite relation indices to match.
pub(crate) fn assemble(
    mentions: Vec<EntityMention>,
    relations: Vec<Relation>,
    diagnostics: Vec<Diagnostic>,
) -> Extraction {
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    let mut sorted = mentions.clone();
    sort_mentions(&mut sorted);
    // stable mapping: pick the first unused slot holding an equal mention
    let mut used = vec![false; sorted.len()];
    for (i, m) in mentions.iter().enumerate() {
        let slot = (0..sorted.len())
            .find(|&j| !used[j] && sorted[j] == *m)
            .expect("sorted list is a permutation");
        used[slot] = true;
        order[i] = slot;
    }
    let mut relations: Vec<Relation> = relations
        .into_iter()
        .map(|r| Relation {
            subject: order[r.subject],
            object: order[r.object],
            ..r
        })
        .collect();
    sort_relations(&mut relations, &sorted);
    Extraction {
        mentions: sorted,
        relations,
        diagnostics,
    }
}

fn push_unique(list: &mut Vec<EntityMention>, m: EntityMention) {
    if !list
        .iter()
        .any(|e| e.sem_type == m.sem_type && e.start == m.start && e.end == m.end)
    {
        list.push(m);
    }
}

/// The full rule cascade over one sentence's dictionary mentions.
pub fn apply_rules(
    sentence_text: &str,
    base: Vec<EntityMention>,
    lexicon: &CompiledLexicon,
    config: &RuleConfig,
) -> Extraction {
    let mut diagnostics = Vec::new();
    let pruned = prune_to_finest(base);
    let joined = join_same_type(pruned, sentence_text, config);
    let (locations, others): (Vec<_>, Vec<_>) = joined
        .into_iter()
        .partition(|m| m.sem_type == SemanticType::Location);

    let absorbed = absorb_context_gap(others, sentence_text, config);
    let others: Vec<EntityMention> = absorbed
        .into_iter()
        .filter_map(|m| strip_stopwords(m, config))
        .collect();
    let mut locations: Vec<EntityMention> = locations
        .into_iter()
        .filter_map(|m| strip_stopwords(m, config))
        .collect();

    let relations = extract_relations(&others, config);

    let mut finished: Vec<Option<EntityMention>> = Vec::with_capacity(others.len());
    let mut derived_ordinals = Vec::new();
    for m in others {
        if m.sem_type != SemanticType::Component {
            finished.push(Some(m));
            continue;
        }
        let (comp, derived) = finish_component(m, sentence_text, lexicon, config, &mut diagnostics);
        finished.push(comp);
        for d in derived {
            match d.sem_type {
                SemanticType::Location => push_unique(&mut locations, d),
                _ => push_unique(&mut derived_ordinals, d),
            }
        }
    }

    // compact surviving mentions, remapping relation indices
    let mut remap = vec![None; finished.len()];
    let mut mentions = Vec::new();
    for (i, m) in finished.into_iter().enumerate() {
        if let Some(m) = m {
            remap[i] = Some(mentions.len());
            mentions.push(m);
        }
    }
    let relations: Vec<Relation> = relations
        .into_iter()
        .filter_map(|r| {
            Some(Relation {
                subject: remap[r.subject]?,
                object: remap[r.object]?,
                ..r
            })
        })
        .collect();
    mentions.extend(locations);
    mentions.extend(derived_ordinals);
    assemble(mentions, relations, diagnostics)
}
