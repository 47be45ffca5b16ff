//! Rank-one completions `W(γ) = [[1, γ], [1/γ, 1]]` of the 2×2 diagonal
//! problem with unit diagonal, and their normal perturbations.

use crate::error::{DlnError, Result};
use crate::geometry::log_volume_density_dw;
use crate::linalg::MatrixD;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolaPoint {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `log` of the infinite-depth density with respect to `dW`.
    pub log_density: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(DlnError::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

pub fn hyperbola_matrix(gamma: f64) -> Result<MatrixD> {
    check_gamma(gamma)?;
    MatrixD::from_row_major(2, &[1.0, gamma, 1.0 / gamma, 1.0])
}

/// Unit normal to the hyperbola at `W(γ)` within the minimiser plane.
pub fn hyperbola_normal(gamma: f64) -> Result<MatrixD> {
    check_gamma(gamma)?;
    let c = 1.0 / (1.0 + gamma.powi(-4)).sqrt();
    MatrixD::from_row_major(2, &[0.0, c / (gamma * gamma), c, 0.0])
}

/// `√(γ⁴+1) / (γ²+1)`, the first-order growth rate of `σ_2` off the hyperbola.
pub fn sigma2_coefficient(gamma: f64) -> f64 {
    (gamma.powi(4) + 1.0).sqrt() / (gamma * gamma + 1.0)
}

/// Leading-order singular values of `W(γ) + η N(γ)` and the density there.
pub fn hyperbola_asymptotics(gamma: f64, eta: f64) -> Result<HyperbolaPoint> {
    check_gamma(gamma)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(DlnError::invalid(format!("eta must be positive, got {eta}")));
    }
    let g2 = gamma * gamma;
    let sigma1 = gamma + 1.0 / gamma + 2.0 * eta / ((1.0 + g2) * (1.0 + gamma.powi(-4)).sqrt());
    let sigma2 = eta * sigma2_coefficient(gamma);
    let log_density = log_volume_density_dw(&[sigma1, sigma2])?;
    Ok(HyperbolaPoint {
        sigma1,
        sigma2,
        log_density,
    })
}
