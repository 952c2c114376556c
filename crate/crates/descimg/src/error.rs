use std::path::PathBuf;

use descimg_core::CoreError;

use crate::fetch::ProviderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: row {row}, field `{field}`: {message}")]
    ManifestRow {
        path: PathBuf,
        row: usize,
        field: String,
        message: String,
    },
    #[error("{0}: no records")]
    NoRecords(PathBuf),
    #[error("duplicate site id {0:?}")]
    DuplicateSite(String),
    #[error("invalid scores for site {site_id}: {reasons}")]
    InvalidScores { site_id: String, reasons: String },
    #[error("no evidence for site {0}")]
    NoEvidence(String),
    #[error("provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("adapter `{command}` failed: {message}")]
    Adapter { command: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown format {0:?}")]
    UnknownFormat(String),
    #[error("{failed} of {total} sites failed")]
    Incomplete { failed: usize, total: usize },
    #[error("interrupted")]
    Interrupted,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
