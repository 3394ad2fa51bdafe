use std::path::PathBuf;

use compadmm_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{count} run(s) diverged: {ids}")]
    Diverged { count: usize, ids: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: malformed trace: {msg}")]
    Trace { path: PathBuf, msg: String },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 config, 2 divergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Parse { .. } | BenchError::Config(_) | BenchError::Core(_) => 1,
            BenchError::Diverged { .. } => 2,
            BenchError::Io { .. } | BenchError::Csv { .. } | BenchError::Trace { .. } => 3,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
