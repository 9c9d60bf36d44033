use thiserror::Error;

/// Errors raised by the learners, the simulator and the metrics engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or input table violates its documented constraints.
    #[error("configuration error: {0}")]
    Config(String),

    /// A probability vector has a negative entry or does not sum to one.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A learner was driven in a way the protocol does not allow.
    #[error("protocol misuse: {0}")]
    Protocol(String),

    /// An operation requires a delay-visibility mode other than the active one.
    #[error("mode error: {0}")]
    Mode(String),

    /// Run records from different scenarios were aggregated together.
    #[error("aggregation error: {0}")]
    Aggregation(String),

    /// An internal invariant was found broken at runtime.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
