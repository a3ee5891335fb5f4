use thiserror::Error;

/// Errors raised by the discretization, functionals and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter violates a constructor constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Incompatible options were combined (e.g. analytic tail on a non-standard kernel).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Two grid functions (or a grid function and a model) live on different meshes.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// A solver precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation was called on the wrong problem variant (P1 vs P2).
    #[error("wrong problem variant: {0}")]
    WrongVariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
