use thiserror::Error;

/// Errors produced by the game, solver and explainer layers.
///
/// The variants map onto three classes used by the command line front end:
/// configuration problems, misuse of an API (usage), and resource limits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("game contract violated: {0}")]
    Contract(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
