//! Numerical laboratory for the deep linear network (DLN).
//!
//! The end-to-end matrix `W = W_N ⋯ W_1` of a balanced depth-`N` network
//! follows a Riemannian gradient flow on `GL(d)`. This crate provides
//!
//! - [`linalg`]: dense SVD with a fixed sign convention, smooth-SVD
//!   perturbation formulas, Wigner sampling and the SVD Jacobian oracle;
//! - [`geometry`]: the eigenvalues `λ^N_{il}` of the depth-`N` operator
//!   (including `N = ∞`), the dual metric and the volume densities;
//! - [`dynamics`]: matrix-completion losses, the SVD-coordinate flow with
//!   fixed-step RK4, and the reference flow on the individual layers;
//! - [`analysis`]: effective rank, attraction rates, the 2×2 hyperbola
//!   asymptotics, 3×3 rank-two completions and Monte Carlo volumes;
//! - [`oracle`]: slow, independent reference routines used to cross-check
//!   the fast paths.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracle;

pub use error::{DlnError, Result};
pub use geometry::Depth;
pub use linalg::{MatrixD, SvdState};
