use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration. `path` is the dotted field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// An action violated the task's per-axis bounds. Actions are never
    /// silently clamped once they reach the prediction or execution layer.
    #[error("action {index} out of bounds: |{axis}| = {value:.6} exceeds {limit:.6}")]
    ActionBounds {
        index: usize,
        axis: &'static str,
        value: f64,
        limit: f64,
    },

    /// An operation was called in a state that does not permit it.
    #[error("{0}")]
    State(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn state(message: impl Into<String>) -> Self {
        Error::State(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
