use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no frames found in {0}")]
    EmptyDirectory(PathBuf),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("frame range {start}..={end} outside a {frames}-frame volume")]
    OutOfRange { start: usize, end: usize, frames: usize },
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("duplicate clip id {0:?}")]
    DuplicateClipId(String),
    #[error("class {class:?} has {have} samples, need more than {need}")]
    InsufficientSamples { class: String, have: usize, need: usize },
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("frame of {width}x{height} is too small for scale {scale}")]
    FrameTooSmall { width: usize, height: usize, scale: f64 },
    #[error("{frames} frames is too few for temporal scale {tau} (need {need})")]
    TooFewFrames { frames: usize, tau: usize, need: usize },
    #[error("non-maxima block must be odd and at least 3, got {0}")]
    BadBlockSize(usize),
    #[error("volume of {width}x{height}x{frames} is too small for 3D gradients")]
    VolumeTooSmall { width: usize, height: usize, frames: usize },
    #[error("degenerate orientation bin")]
    DegenerateBin,
    #[error("descriptor support does not fit inside the volume")]
    SupportOutOfBounds,
    #[error("descriptor support has no contrast")]
    LowContrast,
    #[error("clip {0:?} produced no usable features")]
    NoFeatures(String),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("class {0} has no samples")]
    MissingClass(String),
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("direct eigenproblem oracle limited to 64 samples, got {0}")]
    OracleTooLarge(usize),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("model version {major}.{minor} is not supported")]
    VersionMismatch { major: u16, minor: u16 },
    #[error("corrupt file: {0}")]
    CorruptFile(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical core rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::FactorizationFailure(_) | Error::NonFiniteInput | Error::DegenerateData(_)
        )
    }
}
