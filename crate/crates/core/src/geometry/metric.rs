use nalgebra::DMatrix;

use super::SpectrumTable;
use crate::error::{DlnError, Result};
use crate::linalg::{check_square, MatrixD, SvdState};

fn check_shared_sigma(table: &SpectrumTable, state: &SvdState) -> Result<()> {
    let same = table.dim() == state.dim()
        && table
            .sigma()
            .iter()
            .zip(state.sigma_slice())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    if !same {
        return Err(DlnError::DimensionMismatch {
            expected: format!("state with sigma {:?}", table.sigma()),
            actual: format!("sigma {:?}", state.sigma_slice()),
        });
    }
    Ok(())
}

/// Riemannian gradient `g^{N*} G = U (Λ ∘ (Uᵀ G V)) Vᵀ`.
///
/// This is `𝒜_{N,W}(G)` evaluated without forming any `d² × d²` matrix.
pub fn apply_metric_dual(table: &SpectrumTable, state: &SvdState, euclid_grad: &MatrixD) -> Result<MatrixD> {
    check_shared_sigma(table, state)?;
    check_square(euclid_grad.as_dmatrix(), state.dim(), "gradient")?;
    let (u, v) = (state.u(), state.v());
    let p = u.transpose() * euclid_grad.as_dmatrix() * v;
    let scaled = p.component_mul(table.lambda());
    MatrixD::new(u * scaled * v.transpose())
}

/// Entries of the dual metric matrix `(V⊗U) diag(λ) (V⊗U)ᵀ` on the given
/// matrix positions.
///
/// Positions `(r, c)` index the matrix entry `w_rc`; the result has one row
/// and column per position, in the order given. Passing every position in
/// column-major order yields the full `d² × d²` matrix in the `vec`
/// convention (`vec(U X Vᵀ) = (V⊗U) vec(X)`).
pub fn dual_metric_matrix(
    table: &SpectrumTable,
    state: &SvdState,
    positions: &[(usize, usize)],
) -> Result<DMatrix<f64>> {
    check_shared_sigma(table, state)?;
    let d = state.dim();
    if let Some(&(r, c)) = positions.iter().find(|(r, c)| *r >= d || *c >= d) {
        return Err(DlnError::invalid(format!("position ({r}, {c}) outside a {d}x{d} matrix")));
    }
    let (u, v) = (state.u(), state.v());
    let lambda = table.lambda();
    let m = positions.len();
    // Rows of (V⊗U) restricted to the requested positions: B[p, (i,l)] = U[r,i] V[c,l].
    let basis = DMatrix::from_fn(m, d * d, |p, k| {
        let (r, c) = positions[p];
        let (i, l) = (k % d, k / d);
        u[(r, i)] * v[(c, l)]
    });
    let weights = DMatrix::from_fn(d * d, 1, |k, _| lambda[(k % d, k / d)]);
    let mut weighted = basis.clone();
    for k in 0..d * d {
        weighted.column_mut(k).scale_mut(weights[(k, 0)]);
    }
    Ok(weighted * basis.transpose())
}
