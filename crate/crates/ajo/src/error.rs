use std::io;
use std::path::PathBuf;

use ajo_core::chain::ChainError;
use ajo_core::clique::CliqueError;
use ajo_core::column::ColumnError;
use ajo_core::dynamics::DynamicsError;
use ajo_core::fractal::FractalError;
use ajo_core::query::QueryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AjoError {
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: unsupported format version {found:?} (expected {expected:?})")]
    Version { path: String, found: String, expected: &'static str },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Column(#[from] ColumnError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Clique(#[from] CliqueError),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = AjoError> = std::result::Result<T, E>;

impl AjoError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AjoError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        AjoError::Parse { path: path.into(), line, message: message.into() }
    }

    /// 2 for anything the user typed wrong, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AjoError::Usage(_) | AjoError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Name of the underlying error, e.g. `EmptyColumn` or `Parse`.
    pub fn name(&self) -> String {
        let debug = match self {
            AjoError::Chain(e) => format!("{e:?}"),
            AjoError::Dynamics(e) => format!("{e:?}"),
            AjoError::Fractal(e) => format!("{e:?}"),
            AjoError::Column(e) => format!("{e:?}"),
            AjoError::Query(e) => format!("{e:?}"),
            AjoError::Clique(e) => format!("{e:?}"),
            other => format!("{other:?}"),
        };
        debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
    }
}
