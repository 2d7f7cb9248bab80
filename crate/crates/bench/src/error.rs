use std::path::PathBuf;

/// Failures of the experiment runner, split by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] zopt::Error),
}

impl BenchError {
    pub(crate) fn from_config(e: zopt::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }
}
