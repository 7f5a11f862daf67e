use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must agree in length did not.
    #[error("{context}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A constructor rejected its input (non-finite value, negative weight,
    /// duplicate index, and so on).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The instance falls outside what an operation supports.
    #[error("unsupported instance: {0}")]
    Unsupported(String),

    /// The brute-force oracle refused an instance whose enumeration cost
    /// would be unreasonable.
    #[error("brute force refused: {0}")]
    BruteForceTooLarge(String),

    /// Internal linear-program failure (cycling guard, unbounded phase).
    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
