use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// Two operands that must agree in size do not.
    DimensionMismatch { expected: usize, actual: usize },
    /// A raster was constructed with a pixel buffer of the wrong length.
    InvalidRaster { width: usize, height: usize, len: usize },
    /// A list that must be non-empty was empty.
    Empty(&'static str),
    /// The silhouette has no foreground pixel.
    NoForeground,
    /// Class priors do not sum to one.
    InvalidPriors { sum: f64 },
    /// A class index is outside the known classes.
    UnknownClass(usize),
    /// A matrix expected to be symmetric is not.
    NotSymmetric { row: usize, col: usize, diff: f64 },
    /// The eigen-solver hit its sweep limit.
    NoConvergence { iterations: usize },
    /// Requested feature count is outside `1..=rank`.
    FeatureCount { requested: usize, rank: usize },
    /// A probe or sampling parameter is out of range.
    InvalidParameter(&'static str),
    /// Train/test actor split is degenerate.
    InvalidSplit(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::InvalidRaster { width, height, len } => write!(
                f,
                "raster {width}x{height} needs {} pixels, got {len}",
                width * height
            ),
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::NoForeground => f.write_str("silhouette has no foreground pixels"),
            Error::InvalidPriors { sum } => write!(f, "class priors sum to {sum}, expected 1"),
            Error::UnknownClass(c) => write!(f, "unknown class index {c}"),
            Error::NotSymmetric { row, col, diff } => {
                write!(f, "matrix is not symmetric at ({row}, {col}): |diff| = {diff:e}")
            }
            Error::NoConvergence { iterations } => {
                write!(f, "eigen-solver did not converge after {iterations} iterations")
            }
            Error::FeatureCount { requested, rank } => write!(
                f,
                "requested {requested} features but the scatter matrix has rank {rank}"
            ),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidSplit(msg) => write!(f, "invalid actor split: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
