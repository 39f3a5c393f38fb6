use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("invalid spin indices ({i}, {j}) for a chain of {n} spins")]
    Index { i: usize, j: usize, n: usize },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("epsilon {0} outside the admissible range |ε| ≤ 1")]
    EpsilonOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
