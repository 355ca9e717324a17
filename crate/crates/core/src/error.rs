use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes or index sets of a span program are inconsistent.
    #[error("structural error: {0}")]
    Structural(String),

    /// The target is not in the column space of `A`, so no positive witness
    /// exists for any input.
    #[error("globally infeasible: target is not in the column space of A")]
    GloballyInfeasible,

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The input does not lie on the side of the partition an operation needs.
    #[error("infeasible input: {0}")]
    Infeasible(String),

    /// An operation received a degenerate matrix (for instance `A(x) = 0`).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical identity the construction guarantees failed to hold.
    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
