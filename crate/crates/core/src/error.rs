use thiserror::Error;

use crate::sdp::SolveStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown system label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("`{0:?}` is not a permutation of the operator labels")]
    NotPermutation(Vec<String>),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator has eigenvalue {0:.3e} below the PSD clamp threshold")]
    NegativeEigenvalue(f64),

    #[error("eigendecomposition failed to converge")]
    Convergence,

    #[error("not a quantum state: {0}")]
    NotState(String),

    #[error("invalid process matrix: {0}")]
    InvalidProcessMatrix(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("semidefinite solver finished with status {status:?} (gap {gap:.3e}, residual {residual:.3e})")]
    Solver {
        status: SolveStatus,
        gap: f64,
        residual: f64,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
