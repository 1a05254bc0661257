use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}, {2}) is outside the admissible domain: {3}")]
    OutOfDomain(f64, f64, f64, &'static str),

    #[error("no closed form available: {0}")]
    NotAvailable(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("measure has no mass in the queried ball")]
    EmptyBall,

    #[error("malformed field container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
