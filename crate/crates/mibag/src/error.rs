use std::path::{Path, PathBuf};

/// Errors raised by file handling, configuration and the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] mibag_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        Self::Format { path: path.to_path_buf(), message: message.into() }
    }

    /// Process exit status: 2 for bad input or configuration, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(mibag_core::Error::SingularCovariance { .. }) => 1,
            Error::Core(_) | Error::Format { .. } | Error::Json { .. } | Error::Csv { .. } => 2,
            Error::Toml { .. } | Error::Config(_) => 2,
            Error::Io { .. } | Error::ThreadPool(_) => 1,
        }
    }
}
