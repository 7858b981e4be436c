//! Ontology instances for extracted records and their N-Triples form.
//!
//! A record holds one activity per component mention; each activity points
//! at a single ComponentOrPart carrying name, ordinal, location and the
//! observations and actions linked to it.

use std::fmt::Write as _;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::lexicon::{EntityMention, SemanticType};
use crate::rules::{Predicate, Relation};

pub const BASE_IRI: &str = "http://mxrecords/";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

/// Characters left unescaped in minted IRI path segments.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentOrPartInstance {
    pub name: String,
    pub ordinal: Option<u64>,
    pub location: Option<String>,
    pub observations: Vec<String>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceActivityInstance {
    pub component: ComponentOrPartInstance,
    pub source_sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceRecordInstance {
    pub record_id: String,
    pub asset_id: String,
    pub date_performed: String,
    pub activities: Vec<MaintenanceActivityInstance>,
}

fn push_unique(list: &mut Vec<String>, value: String) {
    if !list.contains(&value) {
        list.push(value);
    }
}

/// One activity per Component mention, in mention order.
pub fn build_activities(
    sentence_index: usize,
    mentions: &[EntityMention],
    relations: &[Relation],
) -> Vec<MaintenanceActivityInstance> {
    mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| m.sem_type == SemanticType::Component)
        .map(|(i, m)| {
            let mut component = ComponentOrPartInstance {
                name: m.surface.clone(),
                ordinal: m.ordinal,
                location: m.location.clone(),
                observations: Vec::new(),
                actions: Vec::new(),
            };
            for r in relations.iter().filter(|r| r.subject == i) {
                let value = mentions[r.object].surface.to_lowercase();
                match r.predicate {
                    Predicate::HasAssociatedAction => push_unique(&mut component.actions, value),
                    Predicate::HasAssociatedObservation => {
                        push_unique(&mut component.observations, value)
                    }
                }
            }
            MaintenanceActivityInstance {
                component,
                source_sentence_index: sentence_index,
            }
        })
        .collect()
}

fn segment(id: &str) -> String {
    utf8_percent_encode(id, SEGMENT).to_string()
}

fn iri(local: &str) -> String {
    format!("<{BASE_IRI}{local}>")
}

/// Escape a string as an N-Triples literal body.
pub fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn literal(value: &str) -> String {
    format!("\"{}\"", escape_literal(value))
}

/// Serialize one record as sorted N-Triples lines.
pub fn serialize_ntriples(record: &MaintenanceRecordInstance) -> String {
    let rid = segment(&record.record_id);
    let subject = iri(&format!("record/{rid}"));
    let rdf_type = format!("<{RDF_TYPE}>");
    let mut lines = vec![
        format!("{subject} {rdf_type} {} .", iri("MaintenanceRecord")),
        format!(
            "{subject} {} {} .",
            iri("recordId"),
            literal(&record.record_id)
        ),
        format!(
            "{subject} {} {} .",
            iri("assetId"),
            literal(&record.asset_id)
        ),
        format!(
            "{subject} {} {} .",
            iri("dateActivityPerformed"),
            literal(&record.date_performed)
        ),
    ];
    for (n, activity) in record.activities.iter().enumerate() {
        let act = iri(&format!("activity/{rid}/{n}"));
        let comp = iri(&format!("component/{rid}/{n}"));
        let c = &activity.component;
        lines.push(format!("{subject} {} {act} .", iri("maintenanceActivity")));
        lines.push(format!("{act} {rdf_type} {} .", iri("MaintenanceActivity")));
        lines.push(format!(
            "{act} {} {comp} .",
            iri("hasAssociatedComponentOrPart")
        ));
        lines.push(format!("{comp} {rdf_type} {} .", iri("ComponentOrPart")));
        lines.push(format!("{comp} {} {} .", iri("hasName"), literal(&c.name)));
        if let Some(ordinal) = c.ordinal {
            lines.push(format!(
                "{comp} {} \"{ordinal}\"^^<{XSD_INTEGER}> .",
                iri("hasAssociatedOrdinal")
            ));
        }
        if let Some(location) = &c.location {
            lines.push(format!(
                "{comp} {} {} .",
                iri("hasAssociatedLocation"),
                literal(location)
            ));
        }
        for o in &c.observations {
            lines.push(format!(
                "{comp} {} {} .",
                iri("hasAssociatedObservation"),
                literal(o)
            ));
        }
        for a in &c.actions {
            lines.push(format!(
                "{comp} {} {} .",
                iri("hasAssociatedAction"),
                literal(a)
            ));
        }
    }
    lines.sort();
    lines.dedup();
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[derive(Serialize)]
struct JsonComponent<'a> {
    name: &'a str,
    ordinal: Option<u64>,
    location: Option<&'a str>,
    observations: &'a [String],
    actions: &'a [String],
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    record_id: &'a str,
    asset_id: &'a str,
    date: &'a str,
    activities: Vec<JsonComponent<'a>>,
}

/// One JSON object (no trailing newline) mirroring the instance types.
pub fn to_json_line(record: &MaintenanceRecordInstance) -> String {
    let json = JsonRecord {
        record_id: &record.record_id,
        asset_id: &record.asset_id,
        date: &record.date_performed,
        activities: record
            .activities
            .iter()
            .map(|a| JsonComponent {
                name: &a.component.name,
                ordinal: a.component.ordinal,
                location: a.component.location.as_deref(),
                observations: &a.component.observations,
                actions: &a.component.actions,
            })
            .collect(),
    };
    serde_json::to_string(&json).expect("plain data serializes")
}
