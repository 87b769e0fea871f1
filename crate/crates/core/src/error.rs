use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The variants are grouped so that a front end can map them onto a small
/// set of exit codes: configuration problems, data/format problems and
/// numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {dimension} expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        dimension: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("format error: {0}")]
    Format(#[from] FormatError),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Problems decoding the binary containers (checkpoints and window stores).
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid content at offset {offset}: {message}")]
    Invalid { offset: usize, message: String },
    #[error("config mismatch: {field} is {found} in file, expected {expected}")]
    ConfigMismatch {
        field: &'static str,
        expected: String,
        found: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 configuration, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) => 4,
            Error::Shape { .. }
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        dimension: &'static str,
        expected: usize,
        actual: usize,
    ) -> Self {
        Error::Shape {
            context,
            dimension,
            expected,
            actual,
        }
    }
}

pub(crate) fn ensure_dim(
    context: &'static str,
    dimension: &'static str,
    expected: usize,
    actual: usize,
) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::shape(context, dimension, expected, actual))
    }
}
