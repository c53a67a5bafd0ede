use thiserror::Error;

/// Errors produced by the pcnn toolkit.
///
/// The variants map one-to-one onto the CLI exit-code classes, so callers
/// can report a failure without inspecting the message.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs that disagree with each other (layer counts, geometry).
    #[error("configuration error: {0}")]
    Config(String),

    /// Weights that violate a structural precondition, e.g. encoding a
    /// kernel whose support is not covered by any selected pattern.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Malformed serialized data; `offset` is the byte (or line) position
    /// where decoding stopped.
    #[error("format error at offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
