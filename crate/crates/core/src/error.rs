use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("bad landmark index range: {0}")]
    BadIndexRange(String),
    #[error("eye centers coincide")]
    DegenerateEyes,
    #[error("affine transform is singular")]
    SingularTransform,
    #[error("eye midpoint lies outside the face box")]
    LandmarksOutsideBox,
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid {grid} does not divide image size {size}")]
    BadGrid { grid: usize, size: usize },
    #[error("cannot resample {from} to {to}")]
    BadResample { from: usize, to: usize },
    #[error("encoder initialization requires a target image")]
    MissingTarget,
    #[error("encoder initialization requires an encoder")]
    MissingEncoder,
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("projection residual vanished: direction lies in the span of the others")]
    DegenerateResult,
    #[error("image too small: need at least {min} pixels per side, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("covariance product is not positive semidefinite (eigenvalue {0})")]
    NonPsdProduct(f64),
    #[error("embedding has zero norm")]
    ZeroEmbedding,
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl ToString, got: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
