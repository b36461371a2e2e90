use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor dims {dims:?} hold {expected} values, got {actual}")]
    LengthMismatch {
        dims: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("invalid dims {0:?}: order must be >= 1 and every dim positive")]
    InvalidDims(Vec<usize>),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("order mismatch: tensor has order {tensor}, kernel has order {kernel}")]
    OrderMismatch { tensor: usize, kernel: usize },
    #[error("kernel {kernel:?} does not fit inside tensor {tensor:?}")]
    KernelTooLarge {
        kernel: Vec<usize>,
        tensor: Vec<usize>,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("explicit matrix of {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: usize, cap: usize },
    #[error("mask entry {index} is {value}, expected 0 or 1")]
    NonBinaryMask { index: usize, value: f64 },
    #[error("sampling mask observes no entries")]
    EmptyMask,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidDims(_) => "invalid_dims",
            Error::NonFinite(_) => "non_finite",
            Error::OrderMismatch { .. } => "order_mismatch",
            Error::KernelTooLarge { .. } => "kernel_too_large",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::TooLarge { .. } => "too_large",
            Error::NonBinaryMask { .. } => "non_binary_mask",
            Error::EmptyMask => "empty_mask",
            Error::Degenerate(_) => "degenerate",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
