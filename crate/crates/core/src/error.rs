use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at row {row}: {source}")]
    Csv {
        row: usize,
        #[source]
        source: csv::Error,
    },

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    /// Role assignment or schema problem (missing target, duplicates, ...).
    #[error("{0}")]
    Schema(String),

    /// Invalid parameter value (k, beta, gamma, bins, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Uncorrected estimate requested on a stratum where one side is empty.
    #[error("undefined estimate: no rows with {side} in stratum")]
    UndefinedEstimate { side: &'static str },

    /// Conditioning event of the rule or its negation has zero probability.
    #[error("degenerate policy: {0}")]
    DegeneratePolicy(String),

    #[error("invalid causal graph: {0}")]
    Graph(String),

    #[error("invalid structural causal model: {0}")]
    Scm(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad parameters rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
