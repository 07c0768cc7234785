//! Sparse storage and iterative solves for the assembled systems.

mod cg;
mod csr;

pub use cg::{
    solve_cg, solve_dense, solve_spd, CgOptions, SolveMethod, SolveReport, DENSE_FALLBACK_LIMIT,
};
pub use csr::CsrMatrix;
