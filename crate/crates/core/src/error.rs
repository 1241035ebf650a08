//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (negative scale, p outside [0, 1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs that do not line up: mismatched gene lists, missing subjects, ragged matrices.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("singular design matrix; linearly dependent columns: {}", columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("degenerate response: {0}")]
    DegenerateResponse(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Structural(_)
                | Error::Config { .. }
                | Error::Parse { .. }
                | Error::DegenerateResponse(_)
        )
    }
}
