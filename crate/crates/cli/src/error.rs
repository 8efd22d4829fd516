use std::path::PathBuf;

use qid_core::QidError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Qid(#[from] QidError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: cannot parse {content:?} as a real number")]
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("report in {0} holds no records")]
    EmptyReport(PathBuf),

    #[error("plot failed: {0}")]
    Plot(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Machine-readable form printed on fatal errors.
    pub fn to_json(&self) -> Value {
        let kind = match self {
            CliError::Qid(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "ParseError",
            CliError::Json { .. } => "Json",
            CliError::EmptyReport(_) => "EmptyReport",
            CliError::Plot(_) => "Plot",
            CliError::Usage(_) => "Usage",
        };
        let mut body = json!({ "kind": kind, "message": self.to_string() });
        match self {
            CliError::Parse {
                path,
                line,
                content,
            } => {
                body["path"] = json!(path);
                body["line"] = json!(line);
                body["content"] = json!(content);
            }
            CliError::Qid(QidError::NearZeroModulus { u, modulus, .. }) => {
                body["u"] = json!(u);
                body["modulus"] = json!(modulus);
            }
            CliError::Io { path, .. } | CliError::Json { path, .. } => {
                body["path"] = json!(path);
            }
            _ => {}
        }
        json!({ "error": body })
    }
}

pub type CliResult<T> = Result<T, CliError>;
