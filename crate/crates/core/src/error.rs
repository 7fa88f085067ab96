//! Error type shared by every module of the crate.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Two tensors (or a tensor and a layer) disagree on shape. Carries both
    /// shapes so the message names them.
    ShapeMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },
    /// A shape or argument is invalid on its own (zero extent, rate out of
    /// range, label out of range, ...).
    InvalidArgument(String),
    /// A network or run configuration is inconsistent; names the offending
    /// stage or key.
    Config(String),
    /// Dataset-level problems: heterogeneous shapes, unknown labels, empty
    /// manifests.
    Data(String),
    /// A binary file did not start with the expected magic bytes.
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    /// A binary file ended before its declared payload.
    Truncated { expected: usize, got: usize },
    /// Header extents and payload length disagree.
    LengthMismatch { expected: usize, got: usize },
    /// A NaN or infinity where only finite values are allowed.
    NonFinite(String),
    /// Unsupported container or checkpoint format version.
    UnsupportedVersion(u16),
    /// Checkpoint precision does not match the requested scalar type.
    PrecisionMismatch { expected: String, found: String },
    /// Training produced a non-finite loss at the named epoch.
    Divergence { epoch: usize },
    /// PCA input with zero spectral covariance.
    DegenerateSpectrum,
    /// I/O failure, with the path that caused it.
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => {
                write!(f, "{op}: shape mismatch between {lhs} and {rhs}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::BadMagic { expected, found } => write!(
                f,
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(found)
            ),
            Error::Truncated { expected, got } => {
                write!(f, "truncated payload: expected {expected} bytes, got {got}")
            }
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: header declares {expected} elements, payload has {got}")
            }
            Error::NonFinite(ctx) => write!(f, "non-finite value in {ctx}"),
            Error::UnsupportedVersion(v) => write!(f, "unsupported format version {v}"),
            Error::PrecisionMismatch { expected, found } => {
                write!(f, "precision mismatch: expected {expected}, checkpoint holds {found}")
            }
            Error::Divergence { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
            Error::DegenerateSpectrum => {
                write!(f, "degenerate spectrum: pixel covariance is zero (all-constant data)")
            }
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
