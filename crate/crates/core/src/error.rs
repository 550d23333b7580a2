use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    /// The weighted Fréchet objective is unbounded below or ill-posed.
    #[error("degenerate weights: weight sum {sum} is not positive")]
    DegenerateWeights { sum: f64 },

    #[error("ill-conditioned covariance (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("cannot fit a rate: {0}")]
    DegenerateRate(String),

    #[error("query row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn incompatible(msg: impl Into<String>) -> Self {
        Error::IncompatibleSpaces(msg.into())
    }

    /// Strips any `Row` wrapping and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Row { source, .. } => source.root(),
            other => other,
        }
    }
}
