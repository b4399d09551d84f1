use thiserror::Error;

/// Errors shared by every scoring and bank-building operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("size mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    SizeMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("cannot downsample {from_w}x{from_h} to {to_w}x{to_h}")]
    Downsample {
        from_w: u32,
        from_h: u32,
        to_w: u32,
        to_h: u32,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown class: {0}")]
    UnknownClass(String),

    #[error("unknown image category: {0}")]
    UnknownCategory(String),

    #[error("class {0} has no category mask")]
    MissingCategoryMask(String),

    #[error("layer mismatch: {0}")]
    LayerMismatch(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("AUROC undefined: labels contain a single class")]
    SingleClassLabels,
}

pub type Result<T> = std::result::Result<T, Error>;
