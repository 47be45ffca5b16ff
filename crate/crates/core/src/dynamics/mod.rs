//! Matrix-completion training dynamics.
//!
//! [`integrate`] evolves the singular coordinates `(U, Σ, V)` of the
//! end-to-end matrix under the depth-`N` Riemannian gradient flow with
//! fixed-step RK4. [`upstairs_flow`] integrates the plain Euclidean gradient
//! flow of the individual layers and serves as the reference it must agree
//! with on balanced initialisations.

mod dense;
mod flow;
mod problem;
mod upstairs;

pub use flow::{
    integrate, integrate_from_state, integrate_observed, svd_flow_rhs, svd_flow_rhs_with_gap_tol, FlowConfig,
    FlowDerivative, RunRecord, Termination, TrajectorySample, RANK_COLLAPSE_FLOOR,
};
pub use problem::CompletionProblem;
pub use upstairs::{
    balance_residuals, balanced_factorization, upstairs_flow, UpstairsSample, UpstairsTrajectory, WeightStack,
};
