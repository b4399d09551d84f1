use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),

    #[error("layout overflow: {0}")]
    LayoutOverflow(String),

    #[error("anomaly kind inapplicable: {0}")]
    Inapplicable(String),

    #[error(transparent)]
    Core(#[from] tmuad_core::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;
