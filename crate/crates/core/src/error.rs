use std::path::PathBuf;

use crate::corpus::DaRef;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unresolved decision id {0}")]
    UnresolvedDecision(String),
    #[error("decision {0} has an empty abstract after normalization")]
    EmptyAbstract(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no posterior row for dialogue act {0}")]
    MissingPosterior(DaRef),
    #[error("{0} requires a nonempty input")]
    EmptyInput(&'static str),
    #[error("cannot form {k} clusters from {n} items")]
    TooManyClusters { k: usize, n: usize },
    #[error("sampler audit failed after sweep {sweep}: {detail}")]
    AuditViolation { sweep: usize, detail: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
