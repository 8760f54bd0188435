//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors surfaced by segmentation, encoding, matching, and statistics.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation that needs at least one element got an empty sequence.
    #[error("input sequence is empty")]
    EmptyInput,

    /// A run-length pair with a zero length cannot be decoded.
    #[error("run length must be at least 1")]
    InvalidRun,

    /// The input is structurally valid but carries no usable signal
    /// (all-zero coefficients, constant image, single-cluster quantization, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The directional run-length evidence never overlaps, so no pupil
    /// candidate region exists.
    #[error("no pupil indicator: {0}")]
    NoPupilIndicator(String),

    /// A flood-fill seed lies outside the image or on a background pixel.
    #[error("invalid seed pixel ({x}, {y})")]
    InvalidSeed { x: u32, y: u32 },

    /// Iris band voting failed to find a usable annulus.
    #[error("segmentation failed: {0}")]
    SegmentationFailure(String),

    /// Two operands have incompatible dimensions or configurations.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The joint occlusion mask of two codes is empty; no bits can be compared.
    #[error("codes share no unmasked bit positions")]
    IncomparableCodes,

    /// A downstream error annotated with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but does not parse as the expected format.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
