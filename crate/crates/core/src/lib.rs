//! Entity and relation extraction for maintenance-record text.
//!
//! Records are split into sentences ([`corpus`]), annotated against a
//! domain dictionary ([`lexicon`]), optionally refined by a rule cascade
//! ([`rules`]) or by a question-answering backend ([`qa`]), assembled into
//! ontology instances ([`semantics`]) and scored against gold annotations
//! ([`evaluation`]).

pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod evaluation;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod qa;
pub mod rules;
pub mod semantics;

pub use corpus::{split_sentences, tokenize, MaintenanceRecordDoc, Sentence, Token};
pub use diagnostics::{Diagnostic, Severity};
pub use error::{Error, Result};
pub use lexicon::{
    compile_lexicon, lookup_all, CompiledLexicon, EntityMention, LexiconConcept, Provenance,
    SemanticType,
};
pub use rules::{Predicate, Relation, RuleConfig};
