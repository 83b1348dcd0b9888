use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] clipwise_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model not loaded: {0}")]
    ModelNotLoaded(&'static str),
}

impl AppError {
    /// Stable machine-readable code, reported as `error_code` by the service.
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.code(),
            AppError::Io { .. } => "IoError",
            AppError::Format(_) => "FormatError",
            AppError::Config(_) => "ConfigError",
            AppError::ModelNotLoaded(_) => "ModelNotLoaded",
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

pub(crate) fn read(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    std::fs::read(path.as_ref()).map_err(|e| AppError::io(path, e))
}

pub(crate) fn read_text(path: impl AsRef<Path>) -> Result<String> {
    std::fs::read_to_string(path.as_ref()).map_err(|e| AppError::io(path, e))
}

pub(crate) fn write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    std::fs::write(path.as_ref(), bytes).map_err(|e| AppError::io(path, e))
}
