use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, SagnError>;

#[derive(Debug, thiserror::Error)]
pub enum SagnError {
    #[error(transparent)]
    Core(#[from] sagn_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {msg}", file.display())]
    Parse { file: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", file.display())]
    Format { file: PathBuf, msg: String },
    #[error("stale cache {}: {field} is {found}, expected {expected}", file.display())]
    StaleCache {
        file: PathBuf,
        field: &'static str,
        expected: String,
        found: String,
    },
    #[error("{}: {source}", file.display())]
    Json { file: PathBuf, source: serde_json::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl SagnError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SagnError::Io { path: path.into(), source }
    }

    /// 1 usage/config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SagnError::Config(_) => 1,
            SagnError::Core(sagn_core::Error::Divergence { .. }) => 3,
            _ => 2,
        }
    }
}
