use std::path::PathBuf;

use thiserror::Error;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension too small: {axis} has length {len}, need at least {min}")]
    DimensionTooSmall {
        axis: &'static str,
        len: usize,
        min: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("plane too small: no co-occurrence chain of order {order} with offset ({dx},{dy}) fits in {width}x{height}")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        order: usize,
        dx: usize,
        dy: usize,
    },

    #[error("histogram bin counts differ: {0} vs {1}")]
    BinCountMismatch(usize, usize),

    #[error("similarity index undefined: histogram coincides with the generated-class mean")]
    DegenerateDenominator,

    #[error("training data contains a single class")]
    SingleClassInput,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("both classes must be present: {0}")]
    MissingClass(String),

    #[error("crop of {crop} does not fit a {width}x{height} image")]
    CropTooLarge {
        crop: usize,
        width: usize,
        height: usize,
    },

    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),

    #[error("malformed {what} at line {line}: {reason}")]
    Format {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
