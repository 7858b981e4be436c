//! Scoring predicted mentions against gold annotations.
//!
//! Strict matching needs identical type and span; fuzzy matching needs the
//! same type and a Sørensen–Dice similarity at or above a threshold. Pairs
//! are assigned one-to-one, greedily by descending similarity.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Provenance, SemanticType};
use crate::par::{map_ordered, Parallelism};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEntity {
    pub text: String,
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub sem_type: SemanticType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl AnnotatedEntity {
    pub fn new(text: &str, start: usize, end: usize, sem_type: SemanticType) -> Self {
        AnnotatedEntity {
            text: text.to_string(),
            start,
            end,
            sem_type,
            context_note: None,
            provenance: None,
        }
    }
}

/// Entities of one sentence; the shape of both gold and predicted files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub sentence_id: String,
    pub entities: Vec<AnnotatedEntity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Strict,
    Fuzzy { threshold: f64 },
}

impl MatchMode {
    pub fn label(&self) -> String {
        match self {
            MatchMode::Strict => "strict".to_string(),
            MatchMode::Fuzzy { threshold } => format!("fuzzy({threshold:.2})"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    /// Dice over lowercase whitespace-token multisets.
    #[default]
    Token,
    /// Dice over lowercase character-bigram multisets.
    CharBigram,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub similarity: Similarity,
    pub parallelism: Parallelism,
}

fn multiset_dice<T: std::hash::Hash + Eq>(a: Vec<T>, b: Vec<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let total = a.len() + b.len();
    let mut counts: HashMap<T, usize> = HashMap::new();
    for x in a {
        *counts.entry(x).or_insert(0) += 1;
    }
    let mut shared = 0;
    for y in b {
        if let Some(c) = counts.get_mut(&y) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    2.0 * shared as f64 / total as f64
}

/// Sørensen–Dice coefficient over lowercase whitespace tokens.
pub fn dice(a: &str, b: &str) -> f64 {
    let tokens = |s: &str| -> Vec<String> { s.split_whitespace().map(str::to_lowercase).collect() };
    multiset_dice(tokens(a), tokens(b))
}

/// Sørensen–Dice coefficient over lowercase character bigrams.
pub fn bigram_dice(a: &str, b: &str) -> f64 {
    let grams = |s: &str| -> Vec<(char, char)> {
        let chars: Vec<char> = s.to_lowercase().chars().collect();
        chars.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let (ga, gb) = (grams(a), grams(b));
    if ga.is_empty() && gb.is_empty() {
        return if a.to_lowercase() == b.to_lowercase() {
            1.0
        } else {
            0.0
        };
    }
    multiset_dice(ga, gb)
}

fn strip_parens(s: &str) -> String {
    s.chars().filter(|c| !matches!(c, '(' | ')')).collect()
}

/// Similarity of a gold/predicted pair. Identical spans score 1.0, so the
/// strict match set is the top of every fuzzy sweep.
fn pair_similarity(gold: &AnnotatedEntity, pred: &AnnotatedEntity, sim: Similarity) -> f64 {
    if gold.start == pred.start && gold.end == pred.end {
        return 1.0;
    }
    let pred_text = strip_parens(&pred.text);
    match sim {
        Similarity::Token => dice(&gold.text, &pred_text),
        Similarity::CharBigram => bigram_dice(&gold.text, &pred_text),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// (gold index, predicted index, similarity)
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_gold: Vec<usize>,
    pub unmatched_predicted: Vec<usize>,
}

pub fn match_entities(
    gold: &[AnnotatedEntity],
    predicted: &[AnnotatedEntity],
    mode: MatchMode,
) -> Matching {
    match_entities_with(gold, predicted, mode, Similarity::Token)
}

pub fn match_entities_with(
    gold: &[AnnotatedEntity],
    predicted: &[AnnotatedEntity],
    mode: MatchMode,
    sim: Similarity,
) -> Matching {
    let mut candidates = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        for (pi, p) in predicted.iter().enumerate() {
            if g.sem_type != p.sem_type {
                continue;
            }
            let score = pair_similarity(g, p, sim);
            let ok = match mode {
                MatchMode::Strict => g.start == p.start && g.end == p.end,
                MatchMode::Fuzzy { threshold } => score >= threshold,
            };
            if ok {
                candidates.push((gi, pi, score));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then(gold[a.0].start.cmp(&gold[b.0].start))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut used_gold = vec![false; gold.len()];
    let mut used_pred = vec![false; predicted.len()];
    let mut pairs = Vec::new();
    for (gi, pi, score) in candidates {
        if !used_gold[gi] && !used_pred[pi] {
            used_gold[gi] = true;
            used_pred[pi] = true;
            pairs.push((gi, pi, score));
        }
    }
    Matching {
        pairs,
        unmatched_gold: (0..gold.len()).filter(|&i| !used_gold[i]).collect(),
        unmatched_predicted: (0..predicted.len()).filter(|&i| !used_pred[i]).collect(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: MatchMode,
    pub per_type: BTreeMap<SemanticType, Metrics>,
    pub overall: Metrics,
}

impl EvalReport {
    /// Fixed-width text table, one row per type plus the pooled row.
    pub fn to_table(&self) -> String {
        let mut out = format!("mode: {}\n", self.mode.label());
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}",
            "type", "precision", "recall", "f1", "tp", "fp", "fn"
        );
        let rows = self
            .per_type
            .iter()
            .map(|(t, m)| (t.as_str(), m))
            .chain([("All", &self.overall)]);
        for (name, m) in rows {
            let _ = writeln!(
                out,
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}",
                name, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_
            );
        }
        out
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    tp: usize,
    predicted: usize,
    gold: usize,
}

fn index_corpus<'a>(
    corpus: &'a [GoldAnnotation],
    what: &str,
) -> Result<HashMap<&'a str, &'a GoldAnnotation>> {
    let mut index = HashMap::new();
    for s in corpus {
        if index.insert(s.sentence_id.as_str(), s).is_some() {
            return Err(Error::Argument(format!(
                "duplicate sentence_id {:?} in {what}",
                s.sentence_id
            )));
        }
    }
    Ok(index)
}

fn validate_gold(sentence: &GoldAnnotation) -> Result<()> {
    let mut seen = HashSet::new();
    for e in &sentence.entities {
        if e.start >= e.end {
            return Err(Error::Argument(format!(
                "gold entity {:?} in {:?} has empty span",
                e.text, sentence.sentence_id
            )));
        }
        if !seen.insert((e.sem_type, e.start, e.end)) {
            return Err(Error::Argument(format!(
                "duplicate gold entity {:?} in {:?}",
                e.text, sentence.sentence_id
            )));
        }
    }
    Ok(())
}

pub fn score(
    gold: &[GoldAnnotation],
    predicted: &[GoldAnnotation],
    mode: MatchMode,
) -> Result<EvalReport> {
    score_with(gold, predicted, mode, &EvalOptions::default())
}

/// Micro-averaged scores over all sentences, per type and pooled.
///
/// Gold sentences without predictions count as empty predictions; a
/// predicted sentence without gold is an error.
pub fn score_with(
    gold: &[GoldAnnotation],
    predicted: &[GoldAnnotation],
    mode: MatchMode,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if let MatchMode::Fuzzy { threshold } = mode {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Argument(format!(
                "dice threshold {threshold} outside [0, 1]"
            )));
        }
    }
    let gold_index = index_corpus(gold, "gold")?;
    let pred_index = index_corpus(predicted, "predictions")?;
    if let Some(orphan) = predicted
        .iter()
        .find(|p| !gold_index.contains_key(p.sentence_id.as_str()))
    {
        return Err(Error::Misaligned(orphan.sentence_id.clone()));
    }
    for g in gold {
        validate_gold(g)?;
    }

    let per_sentence = map_ordered(gold, options.parallelism, |g| {
        let empty = Vec::new();
        let preds = pred_index
            .get(g.sentence_id.as_str())
            .map_or(&empty, |p| &p.entities);
        let m = match_entities_with(&g.entities, preds, mode, options.similarity);
        let mut counts: BTreeMap<SemanticType, Counts> = BTreeMap::new();
        for e in &g.entities {
            counts.entry(e.sem_type).or_default().gold += 1;
        }
        for e in preds {
            counts.entry(e.sem_type).or_default().predicted += 1;
        }
        for (gi, _, _) in m.pairs {
            counts.entry(g.entities[gi].sem_type).or_default().tp += 1;
        }
        counts
    });

    let mut totals: BTreeMap<SemanticType, Counts> = SemanticType::ALL
        .iter()
        .map(|&t| (t, Counts::default()))
        .collect();
    for counts in per_sentence {
        for (t, c) in counts {
            let total = totals.entry(t).or_default();
            total.tp += c.tp;
            total.predicted += c.predicted;
            total.gold += c.gold;
        }
    }
    let metrics = |c: &Counts| Metrics::from_counts(c.tp, c.predicted - c.tp, c.gold - c.tp);
    let pooled = totals.values().fold(Counts::default(), |acc, c| Counts {
        tp: acc.tp + c.tp,
        predicted: acc.predicted + c.predicted,
        gold: acc.gold + c.gold,
    });
    Ok(EvalReport {
        mode,
        per_type: totals.iter().map(|(&t, c)| (t, metrics(c))).collect(),
        overall: metrics(&pooled),
    })
}

/// Thresholds reported by a default sweep.
pub const DEFAULT_SWEEP: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// One fuzzy report per threshold (ascending), then the strict report.
pub fn sweep(
    gold: &[GoldAnnotation],
    predicted: &[GoldAnnotation],
    thresholds: &[f64],
) -> Result<Vec<EvalReport>> {
    sweep_with(gold, predicted, thresholds, &EvalOptions::default())
}

pub fn sweep_with(
    gold: &[GoldAnnotation],
    predicted: &[GoldAnnotation],
    thresholds: &[f64],
    options: &EvalOptions,
) -> Result<Vec<EvalReport>> {
    if let Some(bad) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Argument(format!(
            "dice threshold {bad} outside [0, 1]"
        )));
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut reports = sorted
        .into_iter()
        .map(|threshold| score_with(gold, predicted, MatchMode::Fuzzy { threshold }, options))
        .collect::<Result<Vec<_>>>()?;
    reports.push(score_with(gold, predicted, MatchMode::Strict, options)?);
    Ok(reports)
}

/// Read a gold or predicted JSON Lines file.
pub fn read_annotations<R: BufRead>(reader: R) -> Result<Vec<GoldAnnotation>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(n + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(n + 1, e.to_string()))?);
    }
    Ok(out)
}
