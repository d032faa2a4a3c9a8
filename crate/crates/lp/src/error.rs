use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("row {row} references undeclared variable #{var}")]
    UnknownVariable { row: String, var: usize },

    /// The backend returned values that do not satisfy the model when
    /// substituted back.
    #[error("solution failed re-substitution: {0}")]
    VerificationFailed(String),

    #[error("basis became numerically singular")]
    Numerical,
}
