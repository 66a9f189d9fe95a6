use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    /// At least two whole periodic units are required along each axis.
    #[error("{dimension}: {extent} px holds only {units} whole period(s) of {period} px, need at least 2")]
    TooFewPeriods {
        dimension: &'static str,
        extent: usize,
        period: usize,
        units: usize,
    },

    #[error("invalid periodicity: {0}")]
    InvalidPeriodicity(String),

    #[error("block index {index} out of range 1..={n_blocks}")]
    BlockOutOfRange { index: usize, n_blocks: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("clustering: {0}")]
    Clustering(String),

    #[error("invalid canny parameters: {0}")]
    CannyParams(String),

    #[error("image {height}x{width} is smaller than the {kernel}x{kernel} smoothing kernel")]
    KernelTooLarge {
        height: usize,
        width: usize,
        kernel: usize,
    },

    #[error("synthetic spec: {0}")]
    Spec(String),

    #[error("truth file: {0}")]
    Truth(String),

    #[error("decode: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
