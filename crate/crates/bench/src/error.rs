use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Core(#[from] priorprop_core::Error),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        BenchError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Short machine-readable category used in CLI error lines.
    pub fn category(&self) -> &'static str {
        use priorprop_core::Error as E;
        match self {
            BenchError::Io { .. } => "io",
            BenchError::Parse { .. } => "parse",
            BenchError::Spec(_) => "spec",
            BenchError::Core(E::UnsupportedCombination { .. }) => "unsupported",
            BenchError::Core(E::Diverged { .. } | E::Singular) => "numeric",
            BenchError::Core(_) => "invalid-input",
        }
    }
}
