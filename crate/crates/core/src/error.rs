use thiserror::Error;

/// A violated invariant of an [`LqProblem`](crate::LqProblem).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("Q is not symmetric (|Q - Q^T| = {asymmetry:e})")]
    AsymmetricQ { asymmetry: f64 },
    #[error("R is not symmetric (|R - R^T| = {asymmetry:e})")]
    AsymmetricR { asymmetry: f64 },
    #[error("{matrix} has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        matrix: &'static str,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("{matrix} has a non-finite entry at ({row}, {col})")]
    NonFiniteEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    #[error("state and control dimensions must be at least 1 (n = {n}, m = {m})")]
    EmptyDimension { n: usize, m: usize },
}

impl ValidationError {
    /// Name of the offending problem matrix, if the error is tied to one.
    pub fn matrix(&self) -> Option<&'static str> {
        match self {
            ValidationError::AsymmetricQ { .. } => Some("Q"),
            ValidationError::AsymmetricR { .. } => Some("R"),
            ValidationError::DimensionMismatch { matrix, .. }
            | ValidationError::NonFiniteEntry { matrix, .. } => Some(matrix),
            ValidationError::EmptyDimension { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subspace has numerical rank zero")]
    EmptySubspace,
    #[error("constraint iteration did not stabilize after {iterations} passes")]
    NonConvergence { iterations: usize },
    #[error("invalid experiment shape: {0}")]
    InvalidShape(String),
    #[error("slope fit needs at least two computable records, got {0}")]
    InsufficientData(usize),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
