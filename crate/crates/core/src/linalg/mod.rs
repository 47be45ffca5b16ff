//! Dense small-matrix primitives.
//!
//! Everything here works on square `f64` matrices of modest size (the
//! experiments use `d ≤ 20`). [`MatrixD`] is a validated wrapper over
//! [`nalgebra::DMatrix`]; the raw nalgebra type is used freely inside the
//! crate once inputs have been checked.

mod jacobian;
mod perturbation;
mod random;
mod svd;

pub use jacobian::{log_vandermonde, svd_jacobian_oracle, vandermonde};
pub use perturbation::{svd_perturbation, svd_perturbation_with_gap_tol, SvdDerivative, DEFAULT_GAP_TOL};
pub use random::{random_orthogonal, rng_from_seed, sample_wigner, DlnRng, WignerSpec};
pub use svd::{apply_sign_convention, svd, SvdState};
pub(crate) use svd::svd_dmatrix;

use std::fmt;
use std::ops::Index;

use nalgebra::DMatrix;

use crate::error::{DlnError, Result};

/// A square real matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct MatrixD(DMatrix<f64>);

impl MatrixD {
    /// Builds a `d × d` matrix from row-major entries.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(DlnError::DimensionMismatch {
                expected: format!("{} entries for d = {d}", d * d),
                actual: format!("{} entries", entries.len()),
            });
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(DlnError::DimensionMismatch {
                expected: format!("{d} rows of length {d}"),
                actual: format!("row lengths {:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(DlnError::DimensionMismatch {
                expected: "non-empty square matrix".into(),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        check_finite(&m)?;
        Ok(MatrixD(m))
    }

    pub fn identity(d: usize) -> Self {
        MatrixD(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        MatrixD(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        Self::new(DMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }
}

impl Index<(usize, usize)> for MatrixD {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for MatrixD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dim();
        let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| self.0[(i, j)]).collect()).collect();
        f.debug_tuple("MatrixD").field(&rows).finish()
    }
}

impl From<MatrixD> for DMatrix<f64> {
    fn from(m: MatrixD) -> Self {
        m.0
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(DlnError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub(crate) fn check_square(m: &DMatrix<f64>, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(DlnError::DimensionMismatch {
            expected: format!("{what} of size {d}x{d}"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// `‖MᵀM − I‖_F`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let d = m.ncols();
    (m.transpose() * m - DMatrix::<f64>::identity(d, d)).norm()
}

/// Skew part `M − Mᵀ`.
pub fn skew(m: &DMatrix<f64>) -> DMatrix<f64> {
    m - m.transpose()
}
