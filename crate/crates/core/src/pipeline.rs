//! Per-record orchestration of the three extraction modes.

use serde::Serialize;

use crate::corpus::{MaintenanceRecordDoc, Sentence};
use crate::error::{Error, Result};
use crate::lexicon::{annotate, CompiledLexicon, EntityMention};
use crate::par::{map_ordered, Parallelism};
use crate::qa::{merge_with_base, qa_extract_components, QaBackend, QaConfig};
use crate::rules::{apply_rules, Extraction, Relation, RuleConfig};
use crate::semantics::{build_activities, MaintenanceRecordInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    /// Dictionary lookup only.
    Base,
    /// Dictionary lookup followed by the rule cascade.
    Rules,
    /// Dictionary triggers answered by a QA backend.
    Qa,
}

pub struct Extractor<'a> {
    lexicon: &'a CompiledLexicon,
    mode: PipelineMode,
    qa: QaConfig,
    backend: Option<&'a dyn QaBackend>,
}

impl<'a> Extractor<'a> {
    pub fn new(lexicon: &'a CompiledLexicon, mode: PipelineMode, rules: RuleConfig) -> Self {
        Extractor {
            lexicon,
            mode,
            qa: QaConfig {
                rules,
                ..QaConfig::default()
            },
            backend: None,
        }
    }

    pub fn with_backend(mut self, backend: &'a dyn QaBackend, config: QaConfig) -> Self {
        self.backend = Some(backend);
        self.qa = config;
        self
    }

    pub fn mode(&self) -> PipelineMode {
        self.mode
    }

    pub fn extract_sentence(&self, sentence: &Sentence) -> Result<Extraction> {
        let base = annotate(sentence, self.lexicon);
        Ok(match self.mode {
            PipelineMode::Base => Extraction {
                mentions: base,
                ..Extraction::default()
            },
            PipelineMode::Rules => apply_rules(&sentence.text, base, self.lexicon, &self.qa.rules),
            PipelineMode::Qa => {
                let backend = self
                    .backend
                    .ok_or_else(|| Error::Argument("qa mode needs a backend".into()))?;
                let qa = qa_extract_components(sentence, &base, backend, self.lexicon, &self.qa);
                merge_with_base(base, qa)
            }
        })
    }

    pub fn extract_record(&self, record: &MaintenanceRecordDoc) -> Result<RecordExtraction> {
        let sentences = record
            .sentences()
            .into_iter()
            .map(|sentence| {
                let extraction = self.extract_sentence(&sentence)?;
                Ok(SentenceExtraction {
                    sentence,
                    extraction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RecordExtraction {
            record: record.clone(),
            sentences,
        })
    }

    /// Extract every record; output order follows input order.
    pub fn extract_batch(
        &self,
        records: &[MaintenanceRecordDoc],
        parallelism: Parallelism,
    ) -> Result<Vec<RecordExtraction>> {
        map_ordered(records, parallelism, |r| self.extract_record(r))
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceExtraction {
    pub sentence: Sentence,
    pub extraction: Extraction,
}

impl SentenceExtraction {
    pub fn sentence_id(&self) -> String {
        sentence_id(&self.sentence.parent_record_id, self.sentence.index)
    }
}

/// Key aligning predictions with gold annotations.
pub fn sentence_id(record_id: &str, index: usize) -> String {
    format!("{record_id}:{index}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordExtraction {
    pub record: MaintenanceRecordDoc,
    pub sentences: Vec<SentenceExtraction>,
}

#[derive(Serialize)]
struct MentionLine<'a> {
    sentence_id: String,
    record_id: &'a str,
    sentence_index: usize,
    text: &'a str,
    entities: &'a [EntityMention],
    relations: &'a [Relation],
}

impl RecordExtraction {
    pub fn instance(&self) -> MaintenanceRecordInstance {
        MaintenanceRecordInstance {
            record_id: self.record.record_id.clone(),
            asset_id: self.record.asset_id.clone(),
            date_performed: self.record.date_performed.clone(),
            activities: self
                .sentences
                .iter()
                .flat_map(|s| {
                    build_activities(
                        s.sentence.index,
                        &s.extraction.mentions,
                        &s.extraction.relations,
                    )
                })
                .collect(),
        }
    }

    /// One JSON line per sentence in the annotation file schema, with
    /// relations alongside.
    pub fn mention_lines(&self) -> Vec<String> {
        self.sentences
            .iter()
            .map(|s| {
                serde_json::to_string(&MentionLine {
                    sentence_id: s.sentence_id(),
                    record_id: &self.record.record_id,
                    sentence_index: s.sentence.index,
                    text: &s.sentence.text,
                    entities: &s.extraction.mentions,
                    relations: &s.extraction.relations,
                })
                .expect("plain data serializes")
            })
            .collect()
    }
}
