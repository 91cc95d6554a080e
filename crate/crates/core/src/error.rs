use std::io;

use thiserror::Error;

/// Errors produced by the analysis pipeline and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate eye geometry: corner-to-corner distance is zero")]
    DegenerateGeometry,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("no data rows")]
    NoData,

    #[error("sample {index} is not finite; bridge invalid runs before peak detection")]
    NonFiniteSample { index: usize },

    #[error("index {0} is not a local maximum of the signal")]
    NotAPeak(usize),

    #[error("degenerate value distribution: fewer than two distinct values")]
    DegenerateDistribution,

    #[error("unknown blink id {0}")]
    UnknownBlink(usize),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's data or parameters rather than
    /// by the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
