use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed instance, state or argument.
    #[error("invalid input: {0}")]
    Input(String),

    /// Inputs are individually valid but do not belong together,
    /// e.g. a bias table computed for another instance.
    #[error("configuration mismatch: {0}")]
    Config(String),

    #[error("state space has {count} augmented states, exceeding the limit of {limit}")]
    StateSpaceTooLarge { count: usize, limit: usize },

    #[error("relative value iteration did not converge after {iterations} sweeps (last span {span:.3e})")]
    NotConverged { iterations: usize, span: f64 },

    #[error("state not present in the enumeration: {0}")]
    Enumeration(String),

    #[error("tabular policy has no entry for reels {reels:?} with component {component}")]
    UnmappedState { reels: Vec<u32>, component: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
