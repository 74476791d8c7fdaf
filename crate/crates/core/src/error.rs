use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A layer produced an infinite or NaN activation.
    #[error("non-finite activation in layer {layer}")]
    NonFinite { layer: usize },

    #[error("non-finite loss ({value})")]
    NonFiniteLoss { value: f64 },

    #[error("non-finite gradient entry {value} at parameter index {index}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("explicit scheme unstable: dt = {dt:e} exceeds the limit {max_dt:e}")]
    Stability { dt: f64, max_dt: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
