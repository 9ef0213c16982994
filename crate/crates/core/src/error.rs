//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the ALSC pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported bit depth: max value {0} exceeds the 8-bit range")]
    UnsupportedBitDepth(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image {width}x{height} is smaller than one {side}x{side} patch")]
    ImageTooSmall {
        width: usize,
        height: usize,
        side: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("patch vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-positive patch value {0} in speckle distance")]
    NonPositiveValue(f64),

    #[error("need at least {needed} candidate neighbors, found {found}")]
    TooFewCandidates { needed: usize, found: usize },

    #[error("difference image {width}x{height} is smaller than one {block}x{block} block")]
    BlockTooLarge {
        width: usize,
        height: usize,
        block: usize,
    },

    #[error("ground truth contains only one class")]
    SingleClassTruth,

    #[error("could not reach change fraction {target} within {attempts} relabeling attempts")]
    ChangeFractionUnreachable { target: f64, attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
