//! Smallest eigenpair of infinite, translational-invariant, nearest-neighbour
//! Kronecker-sum operators
//!
//! ```text
//! H = sum_k  ... ⊗ I ⊗ M_{k,k+1} ⊗ I ⊗ ...
//! ```
//!
//! computed by a flexible power iteration on `exp(-H t)`. The eigenvector is
//! kept as a two-core infinite tensor ring (a uniform matrix product state with
//! a two-site unit cell). Every power step applies an even/odd Trotter split
//! of `exp(-H t)` followed by a truncated SVD, and the timestep `t` shrinks
//! whenever a finite projected residual stops improving.
//!
//! Module map:
//!
//! - [`linalg`]: dense kernels, matrix-free Arnoldi and restarted GMRES
//! - [`tensor`]: cores, supercores, merge/split and gate application
//! - [`itr`]: single-core transfer operators and canonical form
//! - [`itr2`]: two-core state, canonical form, Rayleigh quotients, residuals
//! - [`models`]: benchmark Hamiltonian gates and exact reference values
//! - [`evolve`]: one Trotter half-step on a two-core state
//! - [`driver`]: the adaptive flexible power iteration
//! - [`oracle`]: brute-force references (feature `oracle`)

pub mod driver;
pub mod error;
pub mod evolve;
pub mod itr;
pub mod itr2;
pub mod linalg;
pub mod models;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod tensor;

pub use driver::{
    detect_stagnation, flexible_power, flexible_power_observed, CheckEvery, IterationRecord,
    RunConfig, RunOutcome, ScheduleEntry, Termination, DEFAULT_SEED,
};
pub use error::{Error, Result};
pub use evolve::{trotter_half_step, GateCache, Parity, Variant};
pub use itr::{canonicalize, itr_norm_factor, CanonicalItr, TransferOp};
pub use itr2::{
    canonicalize2, projected_avg_eigenvalue, rayleigh_quotient, rayleigh_quotient_general,
    residual, residual_single, residual_with, CenterCore, Centering, Itr2State, ResidualConfig,
    ResidualReport,
};
pub use linalg::{DenseMatrix, EigConfig, LinearOperator, Side};
pub use models::{build_gate, exact_eigenvalue, ModelKind, ModelSpec};
pub use tensor::{apply_gate, merge, split, BondWeights, Core, SuperCore};
