//! Independent reference implementations used by the integration and
//! acceptance tests. They favour brute force over cleverness and share as
//! little code with the library as practical.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use mxsem::evaluation::{AnnotatedEntity, GoldAnnotation};
use mxsem::lexicon::LexiconConcept;
use mxsem::rules::{Predicate, Relation};
use mxsem::semantics::{
    ComponentOrPartInstance, MaintenanceActivityInstance, MaintenanceRecordInstance,
};
use mxsem::{tokenize, EntityMention, SemanticType, Token};
use rand::prelude::*;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn collapse(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------- lookup

/// (start, end, type, uri) for every token window whose text equals some
/// variant, comparing whitespace-collapsed lowercase strings.
pub fn lookup_oracle(
    text: &str,
    tokens: &[Token],
    concepts: &[LexiconConcept],
) -> Vec<(usize, usize, SemanticType, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for j in i + 1..=tokens.len() {
            let (s, e) = (tokens[i].start, tokens[j - 1].end);
            let window: String = chars[s..e].iter().collect();
            let window = collapse(&window);
            for c in concepts {
                if c.variants.iter().any(|v| collapse(v) == window) {
                    out.push((s, e, c.sem_type, c.canonical_uri.clone()));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

// --------------------------------------------------------------- cascade

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleMention {
    pub sem_type: SemanticType,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub note: Option<String>,
    pub ordinal: Option<u64>,
    pub location: Option<String>,
}

impl OracleMention {
    pub fn of(m: &EntityMention) -> Self {
        OracleMention {
            sem_type: m.sem_type,
            start: m.start,
            end: m.end,
            surface: m.surface.clone(),
            note: m.context_note.clone(),
            ordinal: m.ordinal,
            location: m.location.clone(),
        }
    }

    fn span(text: &str, start: usize, end: usize, sem_type: SemanticType) -> Self {
        OracleMention {
            sem_type,
            start,
            end,
            surface: text[start..end].to_string(),
            note: None,
            ordinal: None,
            location: None,
        }
    }
}

pub type OracleRelation = (OracleMention, Predicate, OracleMention);

pub struct CascadeSetup<'a> {
    pub k: usize,
    pub stop_words: &'a HashSet<String>,
    /// Lowercase location variants, each a single token.
    pub location_words: &'a HashSet<String>,
}

fn linkable(t: SemanticType) -> bool {
    matches!(
        t,
        SemanticType::Component | SemanticType::Action | SemanticType::Observation
    )
}

/// Join every group of same-type mentions connected through
/// whitespace-only gaps, by transitive closure of the adjacency matrix.
fn oracle_join(text: &str, group: Vec<OracleMention>) -> Vec<OracleMention> {
    let n = group.len();
    let mut reach = vec![vec![false; n]; n];
    for a in 0..n {
        reach[a][a] = true;
        for b in 0..n {
            let (x, y) = (&group[a], &group[b]);
            let adjacent = |l: &OracleMention, r: &OracleMention| {
                l.end <= r.start && text[l.end..r.start].chars().all(char::is_whitespace)
            };
            if a != b && (adjacent(x, y) || adjacent(y, x)) {
                reach[a][b] = true;
            }
        }
    }
    for m in 0..n {
        for a in 0..n {
            for b in 0..n {
                if reach[a][m] && reach[m][b] {
                    reach[a][b] = true;
                }
            }
        }
    }
    let mut done = vec![false; n];
    let mut out = Vec::new();
    for a in 0..n {
        if done[a] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&b| reach[a][b]).collect();
        for &b in &members {
            done[b] = true;
        }
        if members.len() == 1 {
            out.push(group[a].clone());
        } else {
            let s = members.iter().map(|&b| group[b].start).min().unwrap();
            let e = members.iter().map(|&b| group[b].end).max().unwrap();
            out.push(OracleMention::span(text, s, e, group[a].sem_type));
        }
    }
    out
}

fn rejoin(tokens: &[&Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && t.start > tokens[i - 1].end {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// First positive ordinal among the tokens of `s`: (value, token index,
/// token count).
fn oracle_ordinal(s: &str) -> Option<(u64, usize, usize)> {
    let toks = tokenize(s);
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i].text.to_lowercase();
        let next = toks.get(i + 1).map(|t| t.text.clone());
        let hit = if t.starts_with('#') && is_digits(&t[1..]) {
            Some((t[1..].to_string(), 1))
        } else if (t == "no" || t == "no.") && next.as_deref().is_some_and(is_digits) {
            Some((next.unwrap(), 2))
        } else if t.len() > 2
            && ["st", "nd", "rd", "th"].contains(&&t[t.len() - 2..])
            && is_digits(&t[..t.len() - 2])
        {
            Some((t[..t.len() - 2].to_string(), 1))
        } else {
            None
        };
        match hit {
            Some((digits, width)) => {
                if let Ok(v) = digits.parse::<u64>() {
                    if v >= 1 {
                        return Some((v, i, width));
                    }
                }
                i += width;
            }
            None => i += 1,
        }
    }
    None
}

/// Char span of the first token run of `needle` inside `[start, end)`.
fn find_run(text: &str, start: usize, end: usize, needle: &str) -> Option<(usize, usize)> {
    let want: Vec<String> = tokenize(needle)
        .iter()
        .map(|t| t.text.to_lowercase())
        .collect();
    let have = tokenize(&text[start..end]);
    if want.is_empty() || have.len() < want.len() {
        return None;
    }
    (0..=have.len() - want.len())
        .find(|&i| (0..want.len()).all(|j| have[i + j].text.to_lowercase() == want[j]))
        .map(|i| (start + have[i].start, start + have[i + want.len() - 1].end))
}

fn narrow(m: &mut OracleMention, text: &str, piece: (usize, usize)) {
    let toks: Vec<(usize, usize)> = tokenize(&text[m.start..m.end])
        .iter()
        .map(|t| (m.start + t.start, m.start + t.end))
        .collect();
    let first = toks.first().copied();
    let last = toks.last().copied();
    if first.is_some_and(|f| f.0 == piece.0) {
        if let Some(next) = toks.iter().find(|t| t.0 >= piece.1) {
            m.start = next.0;
        }
    } else if last.is_some_and(|l| l.1 == piece.1) {
        if let Some(prev) = toks.iter().rev().find(|t| t.1 <= piece.0) {
            m.end = prev.1;
        }
    }
}

/// Longest `n` such that the first `n` tokens are all location words.
fn location_prefix(tokens: &[&Token], words: &HashSet<String>) -> usize {
    (0..=tokens.len())
        .rev()
        .find(|&n| {
            tokens[..n]
                .iter()
                .all(|t| words.contains(&t.text.to_lowercase()))
        })
        .unwrap_or(0)
}

fn finish(
    mut c: OracleMention,
    text: &str,
    setup: &CascadeSetup<'_>,
    derived: &mut Vec<OracleMention>,
) -> Option<OracleMention> {
    let (mut note, mut name) = match &c.note {
        Some(n) => (
            n[1..n.len() - 1].to_string(),
            c.surface[n.len()..].trim_start().to_string(),
        ),
        None => (String::new(), c.surface.clone()),
    };
    for part in [&mut note, &mut name] {
        if let Some((value, at, width)) = oracle_ordinal(part) {
            let toks = tokenize(part);
            let refs: Vec<&Token> = toks.iter().collect();
            let ordinal_text = rejoin(&refs[at..at + width]);
            let rest: Vec<&Token> = refs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j < at || *j >= at + width)
                .map(|(_, t)| *t)
                .collect();
            *part = rejoin(&rest);
            c.ordinal = Some(value);
            if let Some(span) = find_run(text, c.start, c.end, &ordinal_text) {
                derived.push(OracleMention::span(
                    text,
                    span.0,
                    span.1,
                    SemanticType::Ordinal,
                ));
                narrow(&mut c, text, span);
            }
            break;
        }
    }

    let toks = tokenize(&name);
    let refs: Vec<&Token> = toks.iter().collect();
    let p = location_prefix(&refs, setup.location_words);
    let rest: Vec<&Token> = refs[p..].iter().rev().copied().collect();
    let s = location_prefix(&rest, setup.location_words);
    let (pre, mid, suf) = (
        &refs[..p],
        &refs[p..refs.len() - s],
        &refs[refs.len() - s..],
    );
    let pieces: Vec<String> = [rejoin(pre), rejoin(suf)]
        .into_iter()
        .filter(|x| !x.is_empty())
        .collect();
    if !pieces.is_empty() {
        let location = pieces.join(" ");
        if let Some(span) = find_run(text, c.start, c.end, &location) {
            derived.push(OracleMention::span(
                text,
                span.0,
                span.1,
                SemanticType::Location,
            ));
            narrow(&mut c, text, span);
        }
        c.location = Some(location);
        name = rejoin(mid);
    }

    if note.is_empty() {
        c.note = None;
        c.surface = name;
    } else {
        let n = format!("({note})");
        c.surface = if name.is_empty() {
            String::new()
        } else {
            format!("{n} {name}")
        };
        c.note = Some(n);
    }
    (!c.surface.is_empty()).then_some(c)
}

fn strip(m: OracleMention, stops: &HashSet<String>) -> Option<OracleMention> {
    let toks = tokenize(&m.surface);
    let kept: Vec<&Token> = toks
        .iter()
        .filter(|t| !stops.contains(&t.text.to_lowercase()))
        .collect();
    if kept.is_empty() {
        return None;
    }
    if kept.len() == toks.len() {
        return Some(m);
    }
    Some(OracleMention {
        surface: rejoin(&kept),
        ..m
    })
}

/// The rule cascade computed directly from the rule definitions.
pub fn cascade_oracle(
    text: &str,
    base: &[EntityMention],
    setup: &CascadeSetup<'_>,
) -> (Vec<OracleMention>, Vec<OracleRelation>) {
    // finest grain: drop anything with a longer same-start same-type mention
    let mut pruned: Vec<OracleMention> = Vec::new();
    for m in base {
        let dominated = base
            .iter()
            .any(|o| o.start == m.start && o.sem_type == m.sem_type && o.end > m.end);
        let om = OracleMention::span(text, m.start, m.end, m.sem_type);
        if !dominated && !pruned.contains(&om) {
            pruned.push(om);
        }
    }

    let mut by_type: BTreeMap<SemanticType, Vec<OracleMention>> = BTreeMap::new();
    for m in pruned {
        by_type.entry(m.sem_type).or_default().push(m);
    }
    let mut locations = Vec::new();
    let mut others = Vec::new();
    for (t, group) in by_type {
        let joined = oracle_join(text, group);
        if t == SemanticType::Location {
            locations = joined;
        } else {
            others.extend(joined);
        }
    }

    // context capture: try every left partner, keep the closest
    let snapshot = others.clone();
    for (i, m) in others.iter_mut().enumerate() {
        if m.sem_type != SemanticType::Component {
            continue;
        }
        let best_gap = snapshot
            .iter()
            .enumerate()
            .filter(|(j, p)| *j != i && linkable(p.sem_type) && p.end <= m.start)
            .map(|(_, p)| m.start - p.end)
            .min();
        let Some(gap) = best_gap else { continue };
        if gap == 0 || gap > setup.k {
            continue;
        }
        let gap_start = m.start - gap;
        let toks = tokenize(&text[gap_start..m.start]);
        if toks.is_empty()
            || toks
                .iter()
                .any(|t| !t.text.chars().any(char::is_alphanumeric))
        {
            continue;
        }
        let content: Vec<String> = toks
            .iter()
            .map(|t| t.text.to_lowercase())
            .filter(|w| !setup.stop_words.contains(w))
            .collect();
        m.start = gap_start + toks[0].start;
        if !content.is_empty() {
            let note = format!("({})", content.join(" "));
            m.surface = format!("{note} {}", m.surface);
            m.note = Some(note);
        }
    }

    let others: Vec<OracleMention> = others
        .into_iter()
        .filter_map(|m| strip(m, setup.stop_words))
        .collect();
    let mut locations: Vec<OracleMention> = locations
        .into_iter()
        .filter_map(|m| strip(m, setup.stop_words))
        .collect();

    let mut pairs = Vec::new();
    for (s, subj) in others.iter().enumerate() {
        for (o, obj) in others.iter().enumerate() {
            if subj.sem_type != SemanticType::Component {
                continue;
            }
            let predicate = match obj.sem_type {
                SemanticType::Action => Predicate::HasAssociatedAction,
                SemanticType::Observation => Predicate::HasAssociatedObservation,
                _ => continue,
            };
            let gap = if subj.end <= obj.start {
                obj.start - subj.end
            } else if obj.end <= subj.start {
                subj.start - obj.end
            } else {
                continue;
            };
            if gap <= setup.k {
                pairs.push((s, predicate, o));
            }
        }
    }

    let mut derived = Vec::new();
    let finished: Vec<Option<OracleMention>> = others
        .into_iter()
        .map(|m| {
            if m.sem_type == SemanticType::Component {
                finish(m, text, setup, &mut derived)
            } else {
                Some(m)
            }
        })
        .collect();
    let mut ordinals: Vec<OracleMention> = Vec::new();
    for d in derived {
        let list = if d.sem_type == SemanticType::Location {
            &mut locations
        } else {
            &mut ordinals
        };
        if !list.iter().any(|e| e.start == d.start && e.end == d.end) {
            list.push(d);
        }
    }

    let mut relations: Vec<OracleRelation> = pairs
        .into_iter()
        .filter_map(|(s, p, o)| Some((finished[s].clone()?, p, finished[o].clone()?)))
        .collect();
    relations.sort();
    relations.dedup();
    let mut mentions: Vec<OracleMention> = finished.into_iter().flatten().collect();
    mentions.extend(locations);
    mentions.extend(ordinals);
    mentions.sort();
    (mentions, relations)
}

pub fn view_extraction(
    mentions: &[EntityMention],
    relations: &[Relation],
) -> (Vec<OracleMention>, Vec<OracleRelation>) {
    let mut ms: Vec<OracleMention> = mentions.iter().map(OracleMention::of).collect();
    ms.sort();
    let mut rs: Vec<OracleRelation> = relations
        .iter()
        .map(|r| {
            (
                OracleMention::of(&mentions[r.subject]),
                r.predicate,
                OracleMention::of(&mentions[r.object]),
            )
        })
        .collect();
    rs.sort();
    rs.dedup();
    (ms, rs)
}

// --------------------------------------------------------------- metrics

fn token_multiset_dice(a: &str, b: &str) -> f64 {
    let mut xs: Vec<String> = a.split_whitespace().map(str::to_lowercase).collect();
    let mut ys: Vec<String> = b.split_whitespace().map(str::to_lowercase).collect();
    if xs.is_empty() && ys.is_empty() {
        return 1.0;
    }
    let total = (xs.len() + ys.len()) as f64;
    xs.sort();
    ys.sort();
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    2.0 * shared as f64 / total
}

pub fn oracle_similarity(g: &AnnotatedEntity, p: &AnnotatedEntity) -> f64 {
    if (g.start, g.end) == (p.start, p.end) {
        1.0
    } else {
        token_multiset_dice(&g.text, &p.text.replace(['(', ')'], ""))
    }
}

fn admissible(g: &AnnotatedEntity, p: &AnnotatedEntity, threshold: Option<f64>) -> bool {
    g.sem_type == p.sem_type
        && match threshold {
            None => (g.start, g.end) == (p.start, p.end),
            Some(t) => oracle_similarity(g, p) >= t,
        }
}

/// Greedy one-to-one matching by repeatedly taking the best remaining pair
/// (highest similarity, then earliest gold start, gold index, predicted
/// index). `threshold = None` means exact spans.
pub fn greedy_pairs(
    gold: &[AnnotatedEntity],
    pred: &[AnnotatedEntity],
    threshold: Option<f64>,
) -> Vec<(usize, usize)> {
    let mut used_g = vec![false; gold.len()];
    let mut used_p = vec![false; pred.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for (gi, g) in gold.iter().enumerate() {
            for (pi, p) in pred.iter().enumerate() {
                if used_g[gi] || used_p[pi] || !admissible(g, p, threshold) {
                    continue;
                }
                let cand = (oracle_similarity(g, p), g.start, gi, pi);
                let better = match best {
                    None => true,
                    Some(b) => {
                        cand.0 > b.0
                            || (cand.0 == b.0 && (cand.1, cand.2, cand.3) < (b.1, b.2, b.3))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        match best {
            Some((_, _, gi, pi)) => {
                used_g[gi] = true;
                used_p[pi] = true;
                out.push((gi, pi));
            }
            None => return out,
        }
    }
}

/// Size of a maximum-cardinality matching, by exhaustive search.
pub fn max_matching(
    gold: &[AnnotatedEntity],
    pred: &[AnnotatedEntity],
    threshold: Option<f64>,
) -> usize {
    fn go(
        gi: usize,
        used: &mut Vec<bool>,
        gold: &[AnnotatedEntity],
        pred: &[AnnotatedEntity],
        threshold: Option<f64>,
    ) -> usize {
        if gi == gold.len() {
            return 0;
        }
        let mut best = go(gi + 1, used, gold, pred, threshold);
        for pi in 0..pred.len() {
            if !used[pi] && admissible(&gold[gi], &pred[pi], threshold) {
                used[pi] = true;
                best = best.max(1 + go(gi + 1, used, gold, pred, threshold));
                used[pi] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; pred.len()], gold, pred, threshold)
}

/// (tp, predicted, gold) per type plus pooled, from sentence-level counts.
pub fn oracle_counts(
    gold: &[GoldAnnotation],
    pred: &[GoldAnnotation],
    threshold: Option<f64>,
) -> BTreeMap<Option<SemanticType>, (usize, usize, usize)> {
    let mut out: BTreeMap<Option<SemanticType>, (usize, usize, usize)> = BTreeMap::new();
    for g in gold {
        let empty = Vec::new();
        let p = pred
            .iter()
            .find(|p| p.sentence_id == g.sentence_id)
            .map_or(&empty, |p| &p.entities);
        let tp_pairs: Vec<(usize, usize)> = match threshold {
            // exact spans: count multiset intersection directly
            None => {
                let mut pairs = Vec::new();
                let mut taken = vec![false; p.len()];
                for (gi, ge) in g.entities.iter().enumerate() {
                    if let Some(pi) =
                        (0..p.len()).find(|&pi| !taken[pi] && admissible(ge, &p[pi], None))
                    {
                        taken[pi] = true;
                        pairs.push((gi, pi));
                    }
                }
                pairs
            }
            Some(_) => greedy_pairs(&g.entities, p, threshold),
        };
        for e in &g.entities {
            for key in [Some(e.sem_type), None] {
                out.entry(key).or_default().2 += 1;
            }
        }
        for e in p {
            for key in [Some(e.sem_type), None] {
                out.entry(key).or_default().1 += 1;
            }
        }
        for (gi, _) in tp_pairs {
            for key in [Some(g.entities[gi].sem_type), None] {
                out.entry(key).or_default().0 += 1;
            }
        }
    }
    out
}

pub fn prf(tp: usize, predicted: usize, gold: usize) -> (f64, f64, f64) {
    let p = if predicted == 0 {
        0.0
    } else {
        tp as f64 / predicted as f64
    };
    let r = if gold == 0 {
        0.0
    } else {
        tp as f64 / gold as f64
    };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

const WORDS: &[&str] = &[
    "left", "engine", "gasket", "intake", "valve", "seal", "brake", "motor", "flap", "actuator",
    "leaking", "cracked", "replaced", "hyd", "pump",
];

const ENTITY_TYPES: [SemanticType; 3] = [
    SemanticType::Component,
    SemanticType::Action,
    SemanticType::Observation,
];

/// A random gold/predicted pair of corpora over random sentences. Entity
/// texts are sentence slices, so equal spans always carry equal text;
/// predictions copy, shift, re-type, annotate with a "(note)" or invent
/// entities, and some gold sentences get no prediction line at all.
pub fn random_corpora(rng: &mut StdRng) -> (Vec<GoldAnnotation>, Vec<GoldAnnotation>) {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for s in 0..rng.random_range(1..6) {
        let words: Vec<&str> = (0..rng.random_range(4..14))
            .map(|_| *WORDS.choose(rng).unwrap())
            .collect();
        let mut spans = Vec::new();
        let mut at = 0;
        for w in &words {
            spans.push((at, at + w.len()));
            at += w.len() + 1;
        }
        let text = words.join(" ");
        let entity = |rng: &mut StdRng, t: SemanticType| {
            let i = rng.random_range(0..words.len());
            let j = (i + rng.random_range(1..4)).min(words.len());
            let (a, b) = (spans[i].0, spans[j - 1].1);
            AnnotatedEntity::new(&text[a..b], a, b, t)
        };
        let mut g: Vec<AnnotatedEntity> = Vec::new();
        for _ in 0..rng.random_range(0..=6) {
            let t = ENTITY_TYPES[rng.random_range(0..3)];
            let e = entity(rng, t);
            if !g
                .iter()
                .any(|x| (x.sem_type, x.start, x.end) == (t, e.start, e.end))
            {
                g.push(e);
            }
        }
        let mut p: Vec<AnnotatedEntity> = Vec::new();
        for e in &g {
            match rng.random_range(0..6) {
                0 | 1 => p.push(e.clone()),
                2 => {
                    // move one boundary by a word
                    let i = spans.iter().position(|s| s.0 == e.start).unwrap();
                    let j = spans.iter().position(|s| s.1 == e.end).unwrap();
                    let (i, j) = if rng.random_bool(0.5) && j + 1 < spans.len() {
                        (i, j + 1)
                    } else if i > 0 {
                        (i - 1, j)
                    } else {
                        (i, j)
                    };
                    let (a, b) = (spans[i].0, spans[j].1);
                    p.push(AnnotatedEntity::new(&text[a..b], a, b, e.sem_type));
                }
                3 if e.text.contains(' ') => {
                    let (head, rest) = e.text.split_once(' ').unwrap();
                    let mut n = e.clone();
                    n.text = format!("({head}) {rest}");
                    p.push(n);
                }
                4 => {
                    let mut n = e.clone();
                    n.sem_type = ENTITY_TYPES[rng.random_range(0..3)];
                    p.push(n);
                }
                _ => {}
            }
        }
        for _ in 0..rng.random_range(0..3) {
            let t = ENTITY_TYPES[rng.random_range(0..3)];
            p.push(entity(rng, t));
        }
        p.truncate(6);
        let id = format!("S{s}:0");
        gold.push(GoldAnnotation {
            sentence_id: id.clone(),
            entities: g,
        });
        if rng.random_bool(0.85) {
            pred.push(GoldAnnotation {
                sentence_id: id,
                entities: p,
            });
        }
    }
    (gold, pred)
}

// ------------------------------------------------------------- N-Triples

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

fn parse_iri(s: &str) -> Result<(String, &str), String> {
    let rest = s.strip_prefix('<').ok_or("expected '<'")?;
    let end = rest.find('>').ok_or("unterminated IRI")?;
    let iri = &rest[..end];
    if iri.is_empty() || iri.chars().any(|c| c <= ' ' || "<>\"{}|^`\\".contains(c)) {
        return Err(format!("bad IRI {iri:?}"));
    }
    if !iri.contains(':') {
        return Err(format!("relative IRI {iri:?}"));
    }
    Ok((iri.to_string(), &rest[end + 1..]))
}

fn parse_literal(s: &str) -> Result<(Term, &str), String> {
    let mut chars = s.char_indices();
    if chars.next().map(|(_, c)| c) != Some('"') {
        return Err("expected '\"'".into());
    }
    let mut value = String::new();
    let mut close = None;
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => {
                close = Some(i);
                break;
            }
            '\\' => {
                let (_, e) = chars.next().ok_or("dangling escape")?;
                match e {
                    't' => value.push('\t'),
                    'b' => value.push('\u{8}'),
                    'n' => value.push('\n'),
                    'r' => value.push('\r'),
                    'f' => value.push('\u{c}'),
                    '"' => value.push('"'),
                    '\'' => value.push('\''),
                    '\\' => value.push('\\'),
                    'u' | 'U' => {
                        let n = if e == 'u' { 4 } else { 8 };
                        let hex: String =
                            (0..n).filter_map(|_| chars.next().map(|x| x.1)).collect();
                        let code = u32::from_str_radix(&hex, 16).map_err(|e| e.to_string())?;
                        value.push(char::from_u32(code).ok_or("bad code point")?);
                    }
                    other => return Err(format!("bad escape \\{other}")),
                }
            }
            '\n' | '\r' => return Err("raw line break in literal".into()),
            c => value.push(c),
        }
    }
    let close = close.ok_or("unterminated literal")?;
    let rest = &s[close + 1..];
    if let Some(dt) = rest.strip_prefix("^^") {
        let (iri, rest) = parse_iri(dt)?;
        return Ok((
            Term::Literal {
                value,
                datatype: Some(iri),
            },
            rest,
        ));
    }
    if rest.starts_with('@') {
        return Err("language tags are not produced".into());
    }
    Ok((
        Term::Literal {
            value,
            datatype: None,
        },
        rest,
    ))
}

/// Parse one N-Triples line (IRIs and literals only; no blank nodes).
pub fn parse_ntriple(line: &str) -> Result<(String, String, Term), String> {
    let (s, rest) = parse_iri(line)?;
    let rest = rest
        .strip_prefix(' ')
        .ok_or("expected space after subject")?;
    let (p, rest) = parse_iri(rest)?;
    let rest = rest
        .strip_prefix(' ')
        .ok_or("expected space after predicate")?;
    let (o, rest) = if rest.starts_with('<') {
        let (iri, rest) = parse_iri(rest)?;
        (Term::Iri(iri), rest)
    } else {
        parse_literal(rest)?
    };
    if rest != " ." {
        return Err(format!("expected ' .' terminator, found {rest:?}"));
    }
    Ok((s, p, o))
}

fn local(iri: &str) -> &str {
    iri.strip_prefix("http://mxrecords/").unwrap_or(iri)
}

fn literal_value(t: &Term) -> Option<&str> {
    match t {
        Term::Literal { value, .. } => Some(value),
        Term::Iri(_) => None,
    }
}

/// Rebuild record instances from N-Triples text. Activities come back in
/// their minted order; observation and action lists come back sorted, and
/// sentence indices are not represented in the graph (reported as 0).
pub fn instances_from_ntriples(text: &str) -> Result<Vec<MaintenanceRecordInstance>, String> {
    let mut triples: Vec<(String, String, Term)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        triples.push(parse_ntriple(line).map_err(|e| format!("line {}: {e}", n + 1))?);
    }
    let objects = |s: &str, p: &str| -> Vec<&Term> {
        triples
            .iter()
            .filter(|(ts, tp, _)| ts == s && local(tp) == p)
            .map(|t| &t.2)
            .collect()
    };
    let one = |s: &str, p: &str| -> Result<String, String> {
        let os = objects(s, p);
        match os.as_slice() {
            [t] => literal_value(t)
                .map(str::to_string)
                .ok_or(format!("{p} of {s} is not a literal")),
            _ => Err(format!("{s} has {} {p} values", os.len())),
        }
    };
    let mut records = Vec::new();
    for (s, p, o) in &triples {
        if !(p.ends_with("#type") && *o == Term::Iri("http://mxrecords/MaintenanceRecord".into())) {
            continue;
        }
        let mut acts: Vec<(usize, String)> = objects(s, "maintenanceActivity")
            .into_iter()
            .map(|t| match t {
                Term::Iri(a) => {
                    let n = a
                        .rsplit('/')
                        .next()
                        .and_then(|x| x.parse().ok())
                        .unwrap_or(0);
                    Ok((n, a.clone()))
                }
                _ => Err("activity is not an IRI".to_string()),
            })
            .collect::<Result<_, _>>()?;
        acts.sort();
        let mut activities = Vec::new();
        for (_, a) in acts {
            let comps = objects(&a, "hasAssociatedComponentOrPart");
            let [Term::Iri(c)] = comps.as_slice() else {
                return Err(format!("{a} needs exactly one component"));
            };
            let many = |p: &str| -> Vec<String> {
                let mut v: Vec<String> = objects(c, p)
                    .into_iter()
                    .filter_map(literal_value)
                    .map(str::to_string)
                    .collect();
                v.sort();
                v
            };
            let ordinal = match objects(c, "hasAssociatedOrdinal").as_slice() {
                [] => None,
                [Term::Literal {
                    value,
                    datatype: Some(dt),
                }] if dt == "http://www.w3.org/2001/XMLSchema#integer" => {
                    Some(value.parse::<u64>().map_err(|e| e.to_string())?)
                }
                other => return Err(format!("bad ordinal {other:?}")),
            };
            let location = match objects(c, "hasAssociatedLocation").as_slice() {
                [] => None,
                [t] => literal_value(t).map(str::to_string),
                _ => return Err("several locations".into()),
            };
            activities.push(MaintenanceActivityInstance {
                component: ComponentOrPartInstance {
                    name: one(c, "hasName")?,
                    ordinal,
                    location,
                    observations: many("hasAssociatedObservation"),
                    actions: many("hasAssociatedAction"),
                },
                source_sentence_index: 0,
            });
        }
        records.push(MaintenanceRecordInstance {
            record_id: one(s, "recordId")?,
            asset_id: one(s, "assetId")?,
            date_performed: one(s, "dateActivityPerformed")?,
            activities,
        });
    }
    Ok(records)
}

/// The part of an instance that survives a trip through the graph.
pub fn graph_view(r: &MaintenanceRecordInstance) -> MaintenanceRecordInstance {
    let mut r = r.clone();
    for a in &mut r.activities {
        a.source_sentence_index = 0;
        a.component.observations.sort();
        a.component.actions.sort();
    }
    r
}
