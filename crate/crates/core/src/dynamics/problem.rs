use nalgebra::DMatrix;

use crate::error::{DlnError, Result};
use crate::linalg::{check_square, MatrixD};

/// Target `Φ` and observation mask `𝓑` of the loss
/// `E_𝓑(W) = ½ ‖𝓑 ∘ (Φ − W)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionProblem {
    phi: MatrixD,
    mask: DMatrix<f64>,
}

impl CompletionProblem {
    /// `mask` entries must be exactly `0.0` or `1.0`.
    pub fn new(phi: MatrixD, mask: DMatrix<f64>) -> Result<Self> {
        check_square(&mask, phi.dim(), "mask")?;
        if let Some(bad) = mask.iter().find(|&&b| b != 0.0 && b != 1.0) {
            return Err(DlnError::invalid(format!("mask entries must be 0 or 1, found {bad}")));
        }
        Ok(CompletionProblem { phi, mask })
    }

    /// Mask given as rows of booleans.
    pub fn from_rows(phi: &[Vec<f64>], mask: &[Vec<bool>]) -> Result<Self> {
        let phi = MatrixD::from_rows(phi)?;
        let d = phi.dim();
        if mask.len() != d || mask.iter().any(|r| r.len() != d) {
            return Err(DlnError::DimensionMismatch {
                expected: format!("{d}x{d} mask"),
                actual: format!("{} mask rows", mask.len()),
            });
        }
        Self::new(phi, DMatrix::from_fn(d, d, |i, j| if mask[i][j] { 1.0 } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn phi(&self) -> &MatrixD {
        &self.phi
    }

    pub fn mask(&self) -> &DMatrix<f64> {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)] == 1.0
    }

    /// Number of unobserved entries, the dimension of the minimiser set.
    pub fn unobserved_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b == 0.0).count()
    }

    /// Observed positions in column-major order.
    pub fn observed_positions(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d * d).map(|k| (k % d, k / d)).filter(|&(i, j)| self.is_observed(i, j)).collect()
    }

    pub fn loss(&self, w: &MatrixD) -> Result<f64> {
        check_square(w.as_dmatrix(), self.dim(), "W")?;
        Ok(self.loss_unchecked(w.as_dmatrix()))
    }

    pub(crate) fn loss_unchecked(&self, w: &DMatrix<f64>) -> f64 {
        0.5 * self
            .mask
            .iter()
            .zip(self.phi.as_dmatrix().iter())
            .zip(w.iter())
            .map(|((b, p), x)| b * (p - x) * (p - x))
            .sum::<f64>()
    }

    /// Euclidean gradient `∂_W E = −𝓑 ∘ (Φ − W)`.
    pub fn euclid_grad(&self, w: &MatrixD) -> Result<MatrixD> {
        check_square(w.as_dmatrix(), self.dim(), "W")?;
        MatrixD::new(self.euclid_grad_unchecked(w.as_dmatrix()))
    }

    pub(crate) fn euclid_grad_unchecked(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        (w - self.phi.as_dmatrix()).component_mul(&self.mask)
    }

    /// `‖𝓑 ∘ (Φ − W)‖_max ≤ tol`, membership in the minimiser set `𝒩_𝓑`.
    pub fn is_minimizer(&self, w: &MatrixD, tol: f64) -> bool {
        w.dim() == self.dim()
            && self
                .euclid_grad_unchecked(w.as_dmatrix())
                .iter()
                .all(|x| x.abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_wigner, WignerSpec};

    fn diag2() -> CompletionProblem {
        let phi = MatrixD::from_diagonal(&[0.58724, 1.447]).unwrap();
        CompletionProblem::new(phi, DMatrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn exact_completion_has_zero_loss() {
        let p = diag2();
        assert_eq!(p.loss(p.phi()).unwrap(), 0.0);
        assert_eq!(p.euclid_grad(p.phi()).unwrap(), MatrixD::zeros(2));
    }

    #[test]
    fn identity_mask_direct_sum() {
        let phi = MatrixD::identity(2);
        let p = CompletionProblem::new(phi, DMatrix::identity(2, 2)).unwrap();
        assert_eq!(p.loss(&MatrixD::zeros(2)).unwrap(), 1.0);
    }

    #[test]
    fn off_diagonal_entries_are_free() {
        let p = diag2();
        let w = MatrixD::from_row_major(2, &[0.58724, -3.1, 17.0, 1.447]).unwrap();
        assert_eq!(p.loss(&w).unwrap(), 0.0);
        assert!(p.is_minimizer(&w, 0.0));
        assert_eq!(p.unobserved_count(), 2);
    }

    #[test]
    fn full_mask_zero_target_gradient_is_w() {
        let p = CompletionProblem::new(MatrixD::zeros(3), DMatrix::from_element(3, 3, 1.0)).unwrap();
        let w = sample_wigner(&WignerSpec::new(0.0, 1.0, 3).unwrap(), 4);
        assert_eq!(p.euclid_grad(&w).unwrap(), w);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = WignerSpec::new(0.0, 1.0, 3).unwrap();
        let phi = sample_wigner(&spec, 1);
        let mask = DMatrix::from_row_slice(3, 3, &[1., 0., 1., 1., 1., 0., 0., 1., 1.]);
        let p = CompletionProblem::new(phi, mask).unwrap();
        let w = sample_wigner(&spec, 2);
        let g = p.euclid_grad(&w).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut plus = w.clone().into_dmatrix();
                let mut minus = plus.clone();
                plus[(i, j)] += h;
                minus[(i, j)] -= h;
                let fd = (p.loss_unchecked(&plus) - p.loss_unchecked(&minus)) / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn mask_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1., 0.5, 0., 1.]);
        assert!(CompletionProblem::new(MatrixD::identity(2), bad).is_err());
        assert!(CompletionProblem::new(MatrixD::identity(2), DMatrix::identity(3, 3)).is_err());
    }
}
