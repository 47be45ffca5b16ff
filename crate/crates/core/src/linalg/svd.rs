use nalgebra::{DMatrix, DVector};

use super::{check_finite, check_square, orthogonality_defect, MatrixD};
use crate::error::{DlnError, Result};

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Singular coordinates `W = U diag(σ) Vᵀ` of a square matrix.
///
/// `σ` is non-increasing and non-negative, `U` and `V` are orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdState {
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
}

impl SvdState {
    /// Assembles a state from factors, checking orthogonality and ordering.
    pub fn from_parts(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        let d = sigma.len();
        if d == 0 {
            return Err(DlnError::invalid("empty singular value vector"));
        }
        check_square(&u, d, "U")?;
        check_square(&v, d, "V")?;
        check_finite(&u)?;
        check_finite(&v)?;
        for (i, s) in sigma.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 {
                return Err(DlnError::invalid(format!("sigma_{} = {s} is not a finite non-negative value", i + 1)));
            }
            if i > 0 && sigma[i - 1] < *s {
                return Err(DlnError::invalid("singular values must be non-increasing"));
            }
        }
        for (name, m) in [("U", &u), ("V", &v)] {
            let defect = orthogonality_defect(m);
            if defect > ORTHOGONALITY_TOL {
                return Err(DlnError::invalid(format!("{name} is not orthogonal (defect {defect:e})")));
            }
        }
        Ok(SvdState { u, sigma, v })
    }

    /// Same as [`SvdState::from_parts`] without the checks. Callers guarantee
    /// the invariants, e.g. after re-orthonormalisation inside an integrator.
    pub(crate) fn from_parts_unchecked(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>) -> Self {
        SvdState { u, sigma, v }
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn sigma_slice(&self) -> &[f64] {
        self.sigma.as_slice()
    }

    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    pub fn reconstruct_matrix(&self) -> Result<MatrixD> {
        MatrixD::new(self.reconstruct())
    }

    /// Flips the sign of column `i` of both `U` and `V`; the product is unchanged.
    pub fn flip_pair(&mut self, i: usize) {
        self.u.column_mut(i).neg_mut();
        self.v.column_mut(i).neg_mut();
    }

    /// Smallest value of `σ_i² − σ_{i+1}²` over adjacent pairs, with its index.
    pub fn min_gap(&self) -> Option<(usize, f64)> {
        (0..self.dim().saturating_sub(1))
            .map(|i| (i, self.sigma[i] * self.sigma[i] - self.sigma[i + 1] * self.sigma[i + 1]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Singular value decomposition with descending singular values and a fixed
/// sign convention: the entry of largest magnitude in every left singular
/// vector is positive (first index wins ties), and the paired right vector
/// is flipped with it.
pub fn svd(m: &MatrixD) -> Result<SvdState> {
    svd_dmatrix(m.as_dmatrix())
}

pub(crate) fn svd_dmatrix(m: &DMatrix<f64>) -> Result<SvdState> {
    let d = m.nrows();
    let norm = m.norm();
    let decomposition = m.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(DlnError::SvdFailure { norm })?;
    let (u, v_t) = match (decomposition.u, decomposition.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(DlnError::SvdFailure { norm }),
    };
    let s = decomposition.singular_values;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let sigma = DVector::from_iterator(d, order.iter().map(|&k| s[k].max(0.0)));
    let mut u_sorted = DMatrix::zeros(d, d);
    let mut v_sorted = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).transpose());
    }
    if !sigma.iter().all(|x| x.is_finite()) {
        return Err(DlnError::SvdFailure { norm });
    }

    let mut state = SvdState::from_parts_unchecked(u_sorted, sigma, v_sorted);
    apply_sign_convention(&mut state);
    Ok(state)
}

/// Normalises column signs in place (see [`svd`]).
pub fn apply_sign_convention(state: &mut SvdState) {
    for i in 0..state.dim() {
        let col = state.u.column(i);
        let mut best = 0;
        for k in 1..col.len() {
            if col[k].abs() > col[best].abs() {
                best = k;
            }
        }
        if col[best] < 0.0 {
            state.flip_pair(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rng_from_seed, sample_wigner, WignerSpec};

    fn rel_err(state: &SvdState, m: &DMatrix<f64>) -> f64 {
        (state.reconstruct() - m).norm() / m.norm()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&MatrixD::identity(3)).unwrap();
        assert_eq!(s.sigma_slice(), &[1.0, 1.0, 1.0]);
        assert!((s.reconstruct() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_input_sorted() {
        let s = svd(&MatrixD::from_diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(s.sigma_slice(), &[2.0, 1.0]);
        assert!((s.u()[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(s.u()[(1, 0)] > 0.0);
    }

    #[test]
    fn round_trip_and_invariants_on_seeded_samples() {
        let mut worst: f64 = 0.0;
        for (k, d) in [2usize, 3, 5, 20].iter().cycle().take(1000).enumerate() {
            let spec = WignerSpec::new(0.0, 1.0, *d).unwrap();
            let m = sample_wigner(&spec, k as u64);
            let s = svd(&m).unwrap();
            worst = worst.max(rel_err(&s, m.as_dmatrix()));
            assert!(orthogonality_defect(s.u()) <= 1e-10);
            assert!(orthogonality_defect(s.v()) <= 1e-10);
            assert!(s.sigma().as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(worst <= 1e-10, "worst relative error {worst:e}");
    }

    #[test]
    fn sign_convention_is_idempotent() {
        let mut rng = rng_from_seed(3);
        let m = crate::linalg::random_orthogonal(4, &mut rng);
        let s = svd(&MatrixD::new(m).unwrap()).unwrap();
        let mut t = s.clone();
        t.flip_pair(1);
        apply_sign_convention(&mut t);
        assert_eq!(s, t);
    }

    #[test]
    fn from_parts_rejects_unsorted() {
        let id = DMatrix::<f64>::identity(2, 2);
        let err = SvdState::from_parts(id.clone(), DVector::from_vec(vec![1.0, 2.0]), id).unwrap_err();
        assert!(matches!(err, DlnError::InvalidParameter(_)));
    }
}
