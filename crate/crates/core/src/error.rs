use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base distribution: {0}")]
    Distribution(String),

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A channel row puts mass on an output symbol the source marginal never produces.
    #[error("divergence is infinite for base {base}: output {symbol} has zero marginal probability")]
    InfiniteDivergence { base: char, symbol: char },

    /// Rényi entropy is zero, so the critical read length is unbounded.
    #[error("degenerate source: critical length is infinite")]
    InfiniteLcrit,

    #[error("evaluation unavailable: {0}")]
    EvaluationUnavailable(String),

    #[error("estimate unavailable: {0}")]
    EstimateUnavailable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
