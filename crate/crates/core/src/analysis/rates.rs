use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{DlnError, Result};
use crate::geometry::{dual_metric_matrix, eigenvalues, Depth};
use crate::linalg::{check_square, SvdState};

/// Eigenvalues `α` of the dual metric restricted to the observed entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBounds {
    /// Descending.
    pub alphas: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    /// Observed positions, column-major, indexing the rows of the submatrix.
    pub observed: Vec<(usize, usize)>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Present for `d = 2` with the identity mask.
    pub chain: Option<RateChain>,
}

/// `λ_22 ≤ α_2 ≤ λ_12 ≤ α_1 ≤ λ_11`. At infinite depth `λ_ii = σ_i²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateChain {
    pub lambda_22: f64,
    pub alpha_2: f64,
    pub lambda_12: f64,
    pub alpha_1: f64,
    pub lambda_11: f64,
}

impl RateChain {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let seq = [self.lambda_22, self.alpha_2, self.lambda_12, self.alpha_1, self.lambda_11];
        seq.windows(2).all(|w| w[0] <= w[1] + rel_tol * w[1].abs())
    }
}

impl RateBounds {
    /// `min λ ≤ α_i ≤ max λ` for every rate.
    pub fn interlaced(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.lambda_max;
        self.alphas
            .iter()
            .all(|&a| a >= self.lambda_min - slack && a <= self.lambda_max + slack)
    }
}

pub fn attraction_rates(depth: Depth, state: &SvdState, mask: &DMatrix<f64>) -> Result<RateBounds> {
    let d = state.dim();
    check_square(mask, d, "mask")?;
    let observed: Vec<(usize, usize)> = (0..d * d)
        .map(|k| (k % d, k / d))
        .filter(|&(i, j)| mask[(i, j)] != 0.0)
        .collect();
    if observed.is_empty() {
        return Err(DlnError::EmptyMask);
    }
    let table = eigenvalues(depth, state.sigma_slice())?;
    let sub = dual_metric_matrix(&table, state, &observed)?;
    let sub = (&sub + sub.transpose()) * 0.5;
    let mut alphas: Vec<f64> = SymmetricEigen::new(sub).eigenvalues.iter().copied().collect();
    alphas.sort_by(|a, b| b.total_cmp(a));

    let lambda = table.lambda();
    let identity_mask = d == 2 && (0..2).all(|i| (0..2).all(|j| (mask[(i, j)] != 0.0) == (i == j)));
    let chain = identity_mask.then(|| RateChain {
        lambda_22: lambda[(1, 1)],
        alpha_2: alphas[1],
        lambda_12: lambda[(0, 1)],
        alpha_1: alphas[0],
        lambda_11: lambda[(0, 0)],
    });
    Ok(RateBounds {
        alphas,
        sigma_sq: state.sigma_slice().iter().map(|s| s * s).collect(),
        observed,
        lambda_min: lambda.min(),
        lambda_max: lambda.max(),
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{svd, MatrixD};

    #[test]
    fn diagonal_example() {
        let state = svd(&MatrixD::from_diagonal(&[2.0, 1.0]).unwrap()).unwrap();
        let rb = attraction_rates(Depth::Infinite, &state, &DMatrix::identity(2, 2)).unwrap();
        assert!((rb.alphas[0] - 4.0).abs() < 1e-13 && (rb.alphas[1] - 1.0).abs() < 1e-13);
        let chain = rb.chain.unwrap();
        assert!((chain.lambda_12 - 3.0 / 4f64.ln()).abs() < 1e-13);
        assert!(chain.holds(1e-12));
    }

    #[test]
    fn full_mask_returns_all_lambdas() {
        let w = MatrixD::from_row_major(2, &[1.0, 0.4, -0.3, 0.5]).unwrap();
        let state = svd(&w).unwrap();
        let rb = attraction_rates(Depth::Finite(4), &state, &DMatrix::from_element(2, 2, 1.0)).unwrap();
        let t = eigenvalues(Depth::Finite(4), state.sigma_slice()).unwrap();
        let mut want = vec![t.get(0, 0), t.get(0, 1), t.get(1, 0), t.get(1, 1)];
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in rb.alphas.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rb.chain.is_none());
    }

    #[test]
    fn empty_mask_rejected() {
        let state = svd(&MatrixD::from_diagonal(&[2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(
            attraction_rates(Depth::Infinite, &state, &DMatrix::zeros(2, 2)),
            Err(DlnError::EmptyMask)
        );
    }
}
