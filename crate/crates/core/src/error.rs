//! Crate-wide error type and the CLI exit-code mapping.

/// Errors produced by any fallible operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input data (bad indices, labels, configs, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A file failed to parse; carries the path and 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Incompatible matrix or feature dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// A checkpoint or bundle file is corrupt (bad magic, CRC, truncation).
    #[error("corrupt file: {0}")]
    Corrupt(String),

    /// Underlying I/O failure, tagged with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 input/format, 3 training divergence, 4 corruption.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Shape(_) | Error::Io { .. } => 2,
            Error::Diverged(_) => 3,
            Error::Corrupt(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
