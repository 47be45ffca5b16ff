use nalgebra::DMatrix;

use super::perturbation::check_gaps;
use super::{SvdState, DEFAULT_GAP_TOL};
use crate::error::Result;

/// `∏_{i<j} (x_i − x_j)`.
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut p = 1.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            p *= x[i] - x[j];
        }
    }
    p
}

/// `Σ_{i<j} log|x_i − x_j|`; `-∞` when two entries coincide.
pub fn log_vandermonde(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (x[i] - x[j]).abs().ln();
        }
    }
    s
}

/// `|det|` of the linear map `(Aᵁ, Aⱽ, D) ↦ Aᵁ Σ + D + Σ Aⱽ` from pairs of
/// skew-symmetric matrices (coordinates `a_ij`, `i < j`) and diagonal
/// matrices to `𝕄_d`.
///
/// The `d² × d²` matrix is assembled column by column by applying the map to
/// basis elements, then its determinant is taken by LU. The result is the
/// Jacobian of the SVD map and should equal `van(Σ²)`.
pub fn svd_jacobian_oracle(state: &SvdState) -> Result<f64> {
    let sigma = state.sigma_slice();
    check_gaps(sigma, DEFAULT_GAP_TOL)?;
    let d = sigma.len();
    let sig = DMatrix::from_diagonal(state.sigma());

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let mut columns: Vec<DMatrix<f64>> = Vec::with_capacity(d * d);
    for &(i, j) in &pairs {
        let mut a = DMatrix::zeros(d, d);
        a[(i, j)] = 1.0;
        a[(j, i)] = -1.0;
        columns.push(&a * &sig);
    }
    for &(i, j) in &pairs {
        let mut a = DMatrix::zeros(d, d);
        a[(i, j)] = 1.0;
        a[(j, i)] = -1.0;
        columns.push(&sig * &a);
    }
    for i in 0..d {
        let mut e = DMatrix::zeros(d, d);
        e[(i, i)] = 1.0;
        columns.push(e);
    }

    let map = DMatrix::from_fn(d * d, d * d, |row, col| columns[col].as_slice()[row]);
    Ok(map.lu().determinant().abs())
}
