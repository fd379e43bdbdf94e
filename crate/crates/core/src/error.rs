use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The symmetric factorization of a regularized Gram matrix failed.
    /// Under a private mechanism this means the noise broke its PSD guarantee.
    #[error("matrix is not positive definite (round {round:?})")]
    NotPositiveDefinite { round: Option<usize> },

    #[error("decision set is empty")]
    EmptyDecisionSet,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The shifted-Wishart construction is meaningless for these parameters.
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("out-of-order insert: expected round {expected}, got {got}")]
    OutOfOrderInsert { expected: usize, got: usize },

    #[error("query for round {round} is beyond horizon {horizon}")]
    QueryBeyondHorizon { round: usize, horizon: usize },

    #[error("query for round {round} does not match the next round {expected}")]
    StaleQuery { round: usize, expected: usize },

    #[error("mechanism {0} has no node noise")]
    NoNodeNoise(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
