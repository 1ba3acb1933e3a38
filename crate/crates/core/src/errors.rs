//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A text artifact (m2 file, ARPA model, phrase table, weights file,
    /// class map, config) failed to parse. `line` is 1-based.
    #[error("{format} parse error at line {line}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        message: String,
    },

    /// Structurally invalid data: bad edit spans, overlapping edits,
    /// mismatched sentence counts and the like.
    #[error("invalid data: {0}")]
    Invalid(String),

    /// An operation was configured inconsistently (unknown feature name,
    /// missing model for an enabled feature, bad fold count ...).
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn parse(format: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            format,
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
