use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} is limited to n <= {limit}, got {n}")]
    SizeLimit { what: &'static str, n: usize, limit: usize },
    #[error("algebra element is not central: {0}")]
    NotCentral(String),
    #[error("character table: {0}")]
    Degenerate(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
