use thiserror::Error;

/// Errors raised by the geometry, detection, estimation and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not close to a proper rotation")]
    NotARotation,
    #[error("point is behind the camera (depth {0:e})")]
    BehindCamera(f64),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("viewing ray is parallel to the height plane")]
    RayParallelToPlane,
    #[error("back-projected point lies behind the camera")]
    NegativeDepth,
    #[error("threshold window {window} exceeds image dimensions {width}x{height}")]
    ImageTooSmall { window: usize, width: usize, height: usize },
    #[error("tag plane is behind the camera")]
    TagBehindCamera,
    #[error("residual function returned non-finite values at the initial point")]
    NonFiniteResidual,
    #[error("sampling sector is empty")]
    EmptySector,
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
