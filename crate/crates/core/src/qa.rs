//! Question-answering extraction of components.
//!
//! Every Action/Observation mention becomes a "What was <trigger>?" question
//! asked against the sentence. Answer spans are tagged as components, linked
//! back to their trigger, and run through ordinal/location post-processing.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{char_len, char_slice, Sentence};
use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::lexicon::{CompiledLexicon, EntityMention, Provenance, SemanticType};
use crate::rules::{
    assemble, finish_component, prune_to_finest, Extraction, Predicate, Relation, RuleConfig,
};

pub const ENDPOINT_ENV: &str = "MXSEM_QA_ENDPOINT";
pub const DEFAULT_SCORE_FLOOR: f64 = 0.10;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QaQuery {
    pub question: String,
    pub context: String,
}

/// A backend answer. Offsets are character offsets into the context;
/// `-1/-1` means the backend only supplied the text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    #[serde(rename = "answer")]
    pub answer_text: String,
    pub start: i64,
    pub end: i64,
    pub score: f64,
}

impl QaAnswer {
    pub fn no_answer() -> Self {
        QaAnswer {
            answer_text: String::new(),
            start: -1,
            end: -1,
            score: 0.0,
        }
    }
}

pub trait QaBackend: Send + Sync {
    fn answer(&self, query: &QaQuery) -> Result<QaAnswer>;
    fn health(&self) -> Result<()>;
}

/// `"What was <trigger>?"` for an Action or Observation trigger.
pub fn generate_question(trigger: &EntityMention) -> Result<String> {
    match trigger.sem_type {
        SemanticType::Action | SemanticType::Observation => {
            Ok(format!("What was {}?", trigger.surface.to_lowercase()))
        }
        other => Err(Error::TriggerType(other)),
    }
}

/// Client for the `/v1/answer` + `/v1/health` wire protocol.
pub struct HttpBackend {
    agent: ureq::Agent,
    base: String,
}

impl HttpBackend {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            agent,
            base: endpoint.trim_end_matches('/').to_string(),
        }
    }

    fn post_once(&self, query: &QaQuery) -> Result<(u16, Option<QaAnswer>)> {
        let url = format!("{}/v1/answer", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(query)
            .map_err(|e| Error::Backend(format!("POST {url}: {e}")))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Ok((status, None));
        }
        let answer = resp
            .body_mut()
            .read_json::<QaAnswer>()
            .map_err(|e| Error::Backend(format!("POST {url}: bad response body: {e}")))?;
        Ok((status, Some(answer)))
    }
}

impl QaBackend for HttpBackend {
    fn answer(&self, query: &QaQuery) -> Result<QaAnswer> {
        let mut status = 0;
        for _attempt in 0..2 {
            let (code, answer) = self.post_once(query)?;
            if let Some(answer) = answer {
                return Ok(answer);
            }
            status = code;
            if code != 503 {
                break;
            }
        }
        Err(Error::Backend(format!(
            "{}/v1/answer returned status {status}",
            self.base
        )))
    }

    fn health(&self) -> Result<()> {
        let url = format!("{}/v1/health", self.base);
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| Error::Backend(format!("GET {url}: {e}")))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().unwrap_or_default();
        if status == 200 && body.trim().trim_matches('"') == "ok" {
            Ok(())
        } else {
            Err(Error::Backend(format!("GET {url}: status {status}")))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub question: String,
    pub context: String,
    #[serde(flatten)]
    pub response: QaAnswer,
}

/// Scripted backend answering from a `(question, context)` table.
///
/// Unscripted queries get an empty zero-score answer. Every call is counted
/// and logged.
#[derive(Default)]
pub struct MockBackend {
    table: HashMap<QaQuery, QaAnswer>,
    calls: AtomicUsize,
    log: Mutex<Vec<QaQuery>>,
}

impl MockBackend {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let table = entries
            .into_iter()
            .map(|e| {
                (
                    QaQuery {
                        question: e.question,
                        context: e.context,
                    },
                    e.response,
                )
            })
            .collect();
        MockBackend {
            table,
            ..Default::default()
        }
    }

    /// Read a script: a JSON array of entries, or one entry per line.
    pub fn from_reader<R: BufRead>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::parse(0, e.to_string()))?;
        if text.trim_start().starts_with('[') {
            let entries: Vec<ScriptEntry> = serde_json::from_str(&text)?;
            return Ok(Self::new(entries));
        }
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            entries
                .push(serde_json::from_str(line).map_err(|e| Error::parse(n + 1, e.to_string()))?);
        }
        Ok(Self::new(entries))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn queries(&self) -> Vec<QaQuery> {
        self.log.lock().map(|l| l.clone()).unwrap_or_default()
    }
}

impl QaBackend for MockBackend {
    fn answer(&self, query: &QaQuery) -> Result<QaAnswer> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Ok(mut log) = self.log.lock() {
            log.push(query.clone());
        }
        Ok(self
            .table
            .get(query)
            .cloned()
            .unwrap_or_else(QaAnswer::no_answer))
    }

    fn health(&self) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaConfig {
    /// Answers scoring below this are discarded.
    pub score_floor: f64,
    /// Maximum concurrent backend requests per sentence.
    pub max_in_flight: usize,
    pub rules: RuleConfig,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            score_floor: DEFAULT_SCORE_FLOOR,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            rules: RuleConfig::default(),
        }
    }
}

fn ask_all(queries: &[QaQuery], backend: &dyn QaBackend, limit: usize) -> Vec<Result<QaAnswer>> {
    let limit = limit.max(1);
    if limit == 1 || queries.len() <= 1 {
        return queries.iter().map(|q| backend.answer(q)).collect();
    }
    let mut out = Vec::with_capacity(queries.len());
    for chunk in queries.chunks(limit) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|q| scope.spawn(move || backend.answer(q)))
                .collect();
            for h in handles {
                out.push(
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Backend("request thread panicked".into()))),
                );
            }
        });
    }
    out
}

/// Resolve an answer to a trimmed character span of `context`.
fn resolve_span(answer: &QaAnswer, context: &str) -> std::result::Result<(usize, usize), String> {
    let len = char_len(context);
    let (start, end) = if answer.start == -1 && answer.end == -1 {
        let byte = context
            .find(answer.answer_text.as_str())
            .ok_or_else(|| format!("answer {:?} not found in context", answer.answer_text))?;
        let start = char_len(&context[..byte]);
        (start, start + char_len(&answer.answer_text))
    } else {
        if answer.start < 0 || answer.end <= answer.start || answer.end as usize > len {
            return Err(format!(
                "answer offsets [{}, {}) outside context of length {len}",
                answer.start, answer.end
            ));
        }
        let (s, e) = (answer.start as usize, answer.end as usize);
        if char_slice(context, s, e) != answer.answer_text {
            return Err(format!(
                "answer {:?} does not match context at [{s}, {e})",
                answer.answer_text
            ));
        }
        (s, e)
    };
    let slice: Vec<char> = char_slice(context, start, end).chars().collect();
    let lead = slice.iter().take_while(|c| c.is_whitespace()).count();
    let trail = slice.iter().rev().take_while(|c| c.is_whitespace()).count();
    if lead == slice.len() {
        return Err("blank answer".into());
    }
    Ok((start + lead, end - trail))
}

/// Ask one question per Action/Observation trigger and turn the answers
/// into Component mentions linked to their triggers.
///
/// The result holds the triggers, the answer components and any
/// Ordinal/Location mentions split out of them. Identical answer spans
/// from several triggers become one component with several relations.
pub fn qa_extract_components(
    sentence: &Sentence,
    base_mentions: &[EntityMention],
    backend: &dyn QaBackend,
    lexicon: &CompiledLexicon,
    config: &QaConfig,
) -> Extraction {
    let text = sentence.text.as_str();
    let triggers = prune_to_finest(
        base_mentions
            .iter()
            .filter(|m| matches!(m.sem_type, SemanticType::Action | SemanticType::Observation))
            .cloned()
            .collect(),
    );
    if triggers.is_empty() {
        return Extraction::default();
    }
    let queries: Vec<QaQuery> = triggers
        .iter()
        .map(|t| QaQuery {
            question: generate_question(t).expect("triggers are actions or observations"),
            context: text.to_string(),
        })
        .collect();
    let answers = ask_all(&queries, backend, config.max_in_flight);

    let mut diagnostics = Vec::new();
    let mut mentions: Vec<EntityMention> = triggers.clone();
    let mut relations = Vec::new();
    let mut by_span: HashMap<(usize, usize), usize> = HashMap::new();
    let mut components: Vec<usize> = Vec::new();

    for ((trigger_idx, trigger), (query, answer)) in
        triggers.iter().enumerate().zip(queries.iter().zip(answers))
    {
        let answer = match answer {
            Ok(a) => a,
            Err(e) => {
                diagnostics.push(Diagnostic::warning(format!("{:?}: {e}", query.question)));
                continue;
            }
        };
        if answer.answer_text.trim().is_empty() {
            diagnostics.push(Diagnostic::info(format!("{:?}: no answer", query.question)));
            continue;
        }
        if !(answer.score >= config.score_floor && answer.score <= 1.0) {
            diagnostics.push(Diagnostic::info(format!(
                "{:?}: answer {:?} scored {} (floor {}); discarded",
                query.question, answer.answer_text, answer.score, config.score_floor
            )));
            continue;
        }
        let span = match resolve_span(&answer, text) {
            Ok(span) => span,
            Err(msg) => {
                diagnostics.push(Diagnostic::warning(format!("{:?}: {msg}", query.question)));
                continue;
            }
        };
        let comp_idx = *by_span.entry(span).or_insert_with(|| {
            mentions.push(EntityMention::from_span(
                text,
                span.0,
                span.1,
                SemanticType::Component,
                Provenance::Qa,
            ));
            components.push(mentions.len() - 1);
            mentions.len() - 1
        });
        let predicate =
            Predicate::for_object(trigger.sem_type).expect("triggers are actions or observations");
        relations.push(Relation {
            subject: comp_idx,
            predicate,
            object: trigger_idx,
        });
    }

    for (n, &a) in components.iter().enumerate() {
        for &b in &components[n + 1..] {
            if mentions[a].overlaps(&mentions[b]) {
                diagnostics.push(Diagnostic::info(format!(
                    "overlapping answers {:?} and {:?} kept separately",
                    mentions[a].surface, mentions[b].surface
                )));
            }
        }
    }

    let mut finished: Vec<Option<EntityMention>> = Vec::with_capacity(mentions.len());
    let mut derived_all: Vec<EntityMention> = Vec::new();
    for (i, m) in mentions.into_iter().enumerate() {
        if !components.contains(&i) {
            finished.push(Some(m));
            continue;
        }
        let (comp, derived) = finish_component(m, text, lexicon, &config.rules, &mut diagnostics);
        finished.push(comp);
        for d in derived {
            if !derived_all
                .iter()
                .any(|e| e.sem_type == d.sem_type && e.start == d.start && e.end == d.end)
            {
                derived_all.push(d);
            }
        }
    }

    let mut remap = vec![None; finished.len()];
    let mut kept = Vec::new();
    for (i, m) in finished.into_iter().enumerate() {
        if let Some(m) = m {
            remap[i] = Some(kept.len());
            kept.push(m);
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
    kept.extend(derived_all);
    assemble(kept, relations, diagnostics)
}

/// Full QA-mode output for one sentence: the QA extraction plus the base
/// mentions it does not replace. Base components overlapping an answer
/// component are dropped.
pub fn merge_with_base(base: Vec<EntityMention>, qa: Extraction) -> Extraction {
    let Extraction {
        mut mentions,
        relations,
        diagnostics,
    } = qa;
    let answer_components: Vec<EntityMention> = mentions
        .iter()
        .filter(|m| m.provenance == Provenance::Qa && m.sem_type == SemanticType::Component)
        .cloned()
        .collect();
    for b in base {
        let replaced = b.sem_type == SemanticType::Component
            && answer_components.iter().any(|q| q.overlaps(&b));
        let present = mentions.contains(&b);
        if !replaced && !present {
            mentions.push(b);
        }
    }
    assemble(mentions, relations, diagnostics)
}
