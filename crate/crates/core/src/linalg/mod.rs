//! Dense and matrix-free linear-algebra kernels.
//!
//! Dense work (SVD, symmetric eigendecompositions) is delegated to `nalgebra`;
//! the matrix-free pieces (implicitly restarted Arnoldi for dominant
//! eigenpairs and restarted GMRES for the deflated geometric-series solves)
//! live here because they operate on transfer operators that are never formed.

mod arnoldi;
mod dense;
mod gmres;
mod operator;

pub use arnoldi::{dominant_eigenpair, dominant_eigenpair_with, EigConfig};
pub use dense::{
    expm_neg_sym, fix_sign, frobenius_asymmetry, spectral_norm, sym_eigen_ascending, truncated_svd,
    DenseMatrix, TruncatedSvd,
};
pub use gmres::{gmres, solve_deflated, GmresConfig};
pub use operator::{FnOperator, IdentityMinus, LinearOperator, RankOneUpdate, Side};
