//! Dense linear algebra used by the solvers: SPD solves, symmetric
//! eigenvalues, SVD and the pseudoinverse.

mod decomp;
mod matrix;
mod theorem;
pub mod vector;

pub use decomp::{
    pseudoinverse, rank, solve_spd, spectral_bounds, spectral_norm, Cholesky, FactoredSpd,
    SpdCache, Svd, SymmetricEigen, PINV_DEFAULT_TOL,
};
pub use matrix::Matrix;
pub use theorem::{theorem1_constants, Theorem1Constants, Theorem1Params};
