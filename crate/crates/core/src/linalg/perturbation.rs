use nalgebra::{DMatrix, DVector};

use super::{check_square, MatrixD, SvdState};
use crate::error::{DlnError, Result};

/// Default floor on `σ_i² − σ_j²` below which the spectrum counts as repeated.
pub const DEFAULT_GAP_TOL: f64 = 1e-12;

/// First-order change of the singular coordinates along `Ẇ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDerivative {
    pub sigma_dot: DVector<f64>,
    pub u_dot: DMatrix<f64>,
    pub v_dot: DMatrix<f64>,
}

/// Smooth-SVD derivative at `state` in direction `wdot`, with the default gap
/// tolerance.
pub fn svd_perturbation(state: &SvdState, wdot: &MatrixD) -> Result<SvdDerivative> {
    svd_perturbation_with_gap_tol(state, wdot, DEFAULT_GAP_TOL)
}

/// `σ̇_i = u_iᵀ Ẇ v_i`, and `U̇ = U Aᵁ`, `V̇ = V Aⱽ` with skew-symmetric
/// generators obtained from `K = Uᵀ Ẇ V` by
///
/// ```text
/// Aᵁ_il = (K_il σ_l + K_li σ_i) / (σ_l² − σ_i²)
/// Aⱽ_il = (K_il σ_i + K_li σ_l) / (σ_l² − σ_i²)      (i ≠ l)
/// ```
///
/// Fails with [`DlnError::DegenerateSpectrum`] (1-based indices) when two
/// squared singular values are closer than `gap_tol`.
pub fn svd_perturbation_with_gap_tol(state: &SvdState, wdot: &MatrixD, gap_tol: f64) -> Result<SvdDerivative> {
    let d = state.dim();
    check_square(wdot.as_dmatrix(), d, "perturbation")?;
    check_gaps(state.sigma_slice(), gap_tol)?;

    let u = state.u();
    let v = state.v();
    let s = state.sigma();
    let k = u.transpose() * wdot.as_dmatrix() * v;

    let sigma_dot = DVector::from_fn(d, |i, _| k[(i, i)]);
    let mut a_u = DMatrix::zeros(d, d);
    let mut a_v = DMatrix::zeros(d, d);
    for i in 0..d {
        for l in 0..d {
            if i == l {
                continue;
            }
            let denom = s[l] * s[l] - s[i] * s[i];
            a_u[(i, l)] = (k[(i, l)] * s[l] + k[(l, i)] * s[i]) / denom;
            a_v[(i, l)] = (k[(i, l)] * s[i] + k[(l, i)] * s[l]) / denom;
        }
    }
    Ok(SvdDerivative {
        sigma_dot,
        u_dot: u * a_u,
        v_dot: v * a_v,
    })
}

/// Sorted input: adjacent differences bound all pairwise ones.
pub(crate) fn check_gaps(sigma: &[f64], gap_tol: f64) -> Result<()> {
    for i in 0..sigma.len().saturating_sub(1) {
        let gap = sigma[i] * sigma[i] - sigma[i + 1] * sigma[i + 1];
        if !(gap.abs() >= gap_tol) {
            return Err(DlnError::DegenerateSpectrum {
                i: i + 1,
                j: i + 2,
                gap,
                tol: gap_tol,
            });
        }
    }
    Ok(())
}
