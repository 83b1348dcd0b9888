use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical error{}: {message}", epoch.map(|e| alloc::format!(" at epoch {e}")).unwrap_or_default())]
    Numerical { epoch: Option<usize>, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("missing channel stats for {0}")]
    MissingChannelStats(String),
    #[error("degenerate category {0}: median score is not positive")]
    DegenerateCategory(String),
    #[error("title has no tokens")]
    EmptyTitle,
    #[error("video has no frames")]
    EmptyVideo,
    #[error("no videos tagged {0}")]
    NoVideos(String),
    #[error("empty A/B group")]
    EmptyGroup,
    #[error("baseline group mean is zero")]
    DegenerateBaseline,
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Stable machine-readable code, used by the HTTP layer.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::EmptyDataset => "EmptyDataset",
            Error::Shape(_) => "ShapeError",
            Error::Numerical { .. } => "NumericalError",
            Error::Config(_) => "ConfigError",
            Error::Format { .. } => "FormatError",
            Error::MissingChannelStats(_) => "MissingChannelStats",
            Error::DegenerateCategory(_) => "DegenerateCategory",
            Error::EmptyTitle => "EmptyTitle",
            Error::EmptyVideo => "EmptyVideo",
            Error::NoVideos(_) => "NoVideos",
            Error::EmptyGroup => "EmptyGroup",
            Error::DegenerateBaseline => "DegenerateBaseline",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
