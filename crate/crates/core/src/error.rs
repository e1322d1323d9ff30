use std::io;

/// Coarse error category, used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("x = {x:e} m lies outside the truncated slit domain |x| < {limit:e} m")]
    Domain { x: f64, limit: f64 },

    #[error(
        "quadrature did not converge for width {width:e} m: worst grid point r = {r:e} m, \
         estimated error {estimate:e} (tolerance {tolerance:e})"
    )]
    Quadrature {
        width: f64,
        r: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("table row for width index {index} failed: {source}")]
    TableRow {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    BadVersion { expected: u32, found: u32 },

    #[error("stored fingerprint does not match the header contents")]
    CorruptHeader,

    #[error("fingerprint mismatch: file was built for a different geometry, grid or mode")]
    FingerprintMismatch,

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("write failed after {written} records: {source}")]
    PartialOutput {
        written: usize,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Domain { .. } | Error::FingerprintMismatch => {
                ErrorKind::Config
            }
            Error::Quadrature { .. } => ErrorKind::Numerical,
            Error::TableRow { source, .. } => source.kind(),
            Error::BadMagic { .. }
            | Error::BadVersion { .. }
            | Error::CorruptHeader
            | Error::Truncated { .. }
            | Error::Parse(_)
            | Error::PartialOutput { .. }
            | Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
