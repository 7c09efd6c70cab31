//! Dense semidefinite programming over Hermitian PSD blocks with linear
//! equality constraints.

mod builders;
mod dump;
mod problem;
mod solver;

pub use builders::{
    factor_basis, hermitian_basis, identity_factor_rows, kron_sparse, marginal_rows, trace_row,
    ProductBasis, RowSet,
};
pub use dump::{read_dump, write_dump};
pub use problem::{
    BlockSpec, Constraint, SdpProblem, SdpSolution, Sense, SolveStatus, SparseHermitian,
};
pub use solver::{solve, Embedding, SolveOptions};
