use std::path::PathBuf;

/// Errors produced by the library.
///
/// `InvalidInput` and `Parse` are caller mistakes; `Numerical` means a
/// solver gave up and carries whatever diagnostics it had at that point.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{context}: {diagnostics}")]
    Numerical {
        context: &'static str,
        diagnostics: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(context: &'static str, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            diagnostics: diagnostics.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
