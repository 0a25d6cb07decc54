use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A sampling position fell outside the frame.
    #[error("sample position ({x}, {y}) lies outside the frame")]
    OutOfBounds { x: f64, y: f64 },

    /// Too few observation rows survived boundary clipping to pose a
    /// meaningful regression.
    #[error("only {got} usable observations, need at least {need}")]
    InsufficientObservations { got: usize, need: usize },

    /// The normal matrix is singular or too ill-conditioned to invert.
    #[error("singular or ill-conditioned system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    /// A retained principal component has a vanishing eigenvalue, so the
    /// component-domain regression would divide by (nearly) zero.
    #[error("retained component {index} has eigenvalue {eigenvalue:.3e}, below the usable floor")]
    DegenerateComponent { index: usize, eigenvalue: f64 },

    /// A regularizer does not fit the problem dimensions or carries
    /// negative / non-finite entries.
    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    /// A configuration value or dimension pairing is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The samples have zero spread, so no principal direction exists.
    #[error("samples have zero variance, principal directions are undefined")]
    ZeroVariance,

    /// The frame has zero variance, so a noise power cannot be derived
    /// from a signal-to-noise ratio.
    #[error("cannot calibrate noise against a zero-variance frame")]
    CannotCalibrate,

    /// A class has too few members to fit a covariance model.
    #[error("class {label} has {got} members, need at least {need}")]
    InsufficientMembers { label: i64, got: usize, need: usize },

    /// No valid pixels were available for a metric.
    #[error("no valid pixels in the comparison domain")]
    EmptyDomain,

    /// Malformed image or flow file.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// The PGM sample depth is outside the supported 8-bit range.
    #[error("unsupported PGM maxval {maxval}, only maxval <= 255 is supported")]
    UnsupportedDepth { maxval: u32 },

    /// An I/O failure, annotated with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a path to a raw I/O error.
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for a parse failure at a byte offset.
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
