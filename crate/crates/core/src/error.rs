use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("environment index {env} out of range for {k} environments")]
    EnvOutOfRange { env: usize, k: usize },

    /// Reducible switching chain, absorbing environment, mismatched faces.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("integration produced a non-finite state {state:?} in environment {env} at t = {t}")]
    NonFinite { t: f64, env: usize, state: [f64; 3] },

    #[error("species {species} has zero density inside the slope window; rerun in log-space mode")]
    ZeroDensity { species: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    /// Strips replicate wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replicate { source, .. } => source.root(),
            e => e,
        }
    }
}
