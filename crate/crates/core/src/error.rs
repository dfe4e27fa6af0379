use std::path::PathBuf;

use thiserror::Error;

/// Integrity checks performed when loading a serialized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadCheck {
    Length,
    Magic,
    Version,
    Depth,
    Reserved,
    Checksum,
    Endpoints,
    Monotonicity,
    ScalingBound,
}

impl std::fmt::Display for LoadCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LoadCheck::Length => "length",
            LoadCheck::Magic => "magic",
            LoadCheck::Version => "version",
            LoadCheck::Depth => "depth",
            LoadCheck::Reserved => "reserved bytes",
            LoadCheck::Checksum => "checksum",
            LoadCheck::Endpoints => "endpoints",
            LoadCheck::Monotonicity => "monotonicity",
            LoadCheck::ScalingBound => "scaling bound",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate is non-finite or outside its half-open domain.
    #[error("{field} out of range: {value}")]
    Domain { field: &'static str, value: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("model load failed ({check} check): {detail}")]
    Load { check: LoadCheck, detail: String },

    /// Row-level CSV failure; `line` is 1-based and counts the header.
    #[error("{message} at line {line}")]
    Csv { line: u64, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn load(check: LoadCheck, detail: impl Into<String>) -> Self {
        Error::Load {
            check,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
