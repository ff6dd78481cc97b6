use std::path::PathBuf;

use hardy_kernels_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{0} audit(s) failed")]
    AuditFailed(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Exit code: 1 for caller mistakes, 2 for numerical failures, 3 for a
    /// failed audit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Numeric(_)) | CliError::Core(CoreError::Bracket { .. }) => 2,
            CliError::AuditFailed(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
