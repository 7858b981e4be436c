use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("lexicon compilation failed: {}", .problems.join("; "))]
    Lexicon { problems: Vec<String> },

    #[error("invalid concept {uri}: {message}")]
    InvalidConcept { uri: String, message: String },

    #[error("question trigger must be an Action or Observation, got {0}")]
    TriggerType(crate::lexicon::SemanticType),

    #[error("qa backend: {0}")]
    Backend(String),

    #[error("predicted sentence {0:?} has no gold annotation")]
    Misaligned(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
