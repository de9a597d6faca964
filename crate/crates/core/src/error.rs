use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    BadParam(String),

    #[error("empty range for {name}: [{lo}, {hi}]")]
    BadRange { name: String, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("matrix is not a proper rotation: {0}")]
    NotRotation(String),

    #[error("operator and primitive products use different point sets ({operator:?} vs {primitive:?})")]
    PointMismatch {
        operator: Vec<usize>,
        primitive: Vec<usize>,
    },

    #[error("moment {symbol} exceeds the tensor's order {max_order}")]
    MissingMoment { symbol: String, max_order: usize },

    #[error("invariant sum {sum:e} is too close to zero for sum normalization")]
    DegenerateNormalization { sum: f64 },

    #[error("feature vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("training set is empty")]
    EmptyTrain,

    #[error("window {window} does not fit a field of extent {extent:?}")]
    WindowTooLarge { window: usize, extent: Vec<usize> },

    #[error("k = {k} exceeds the {available} scanned centers")]
    KTooLarge { k: usize, available: usize },

    #[error("parse error at byte {offset}: {msg}")]
    ParseAt { offset: u64, msg: String },

    #[error("parse error on line {line}: {msg}")]
    ParseLine { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::BadParam(msg.into())
    }

    /// Process exit code for the command-line front end
    /// (2 usage, 3 I/O, 4 numeric degeneracy).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Image(_) | Error::ParseAt { .. } | Error::ParseLine { .. } => 3,
            Error::DegenerateNormalization { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
