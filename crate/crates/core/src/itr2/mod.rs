//! Two-core infinite tensor rings: canonical form, Rayleigh quotients,
//! residuals and the projected averaged eigenvalue.

mod rayleigh;
mod residual;
mod state;

pub use rayleigh::{rayleigh_quotient, rayleigh_quotient_general, rayleigh_quotient_general_terms};
pub use residual::{
    frame_environment, projected_avg_eigenvalue, residual, residual_single, residual_single_core,
    residual_with, DeflatedTransfer, Environment, FrameEnvironment, ProjectedHamiltonian,
    ResidualConfig, ResidualReport,
};
pub use state::{canonicalize2, canonicalize2_with, CenterCore, Centering, Itr2State};
