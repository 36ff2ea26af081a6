use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate beamformer for user {user}: channel lies in the interferers' span")]
    DegenerateBeamformer { user: usize },

    #[error("degenerate election: all reputations are zero")]
    DegenerateElection,

    #[error("election failed: {0}")]
    ElectionFailure(String),

    #[error("infeasible allocation at AP {ap}, user {user}: {reason}")]
    InfeasibleAllocation { ap: usize, user: usize, reason: String },

    #[error("user {user} has an empty AP cluster")]
    EmptyCluster { user: usize },

    #[error("infinite delay: {0}")]
    InfiniteDelay(String),

    #[error("infeasible decision: {0}")]
    InfeasibleDecision(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
