//! Slow reference implementations, independent of the SVD-coordinate fast
//! paths, used to cross-check them in tests and in `verify`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::CompletionProblem;
use crate::error::Result;
use crate::linalg::{svd, MatrixD, SvdDerivative, SvdState};

/// `S^p` for symmetric positive semidefinite `S` via its eigendecomposition.
pub fn spd_power(s: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((s + s.transpose()) * 0.5);
    let vals = eig.eigenvalues.map(|x| if x <= 0.0 { if p == 0.0 { 1.0 } else { 0.0 } } else { x.powf(p) });
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// `𝒜_{N,W}(Z) = (1/N) Σ_{j=1}^N (W Wᵀ)^{(N−j)/N} Z (Wᵀ W)^{(j−1)/N}`.
pub fn pushforward_explicit(n: u32, w: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let nf = f64::from(n);
    let left = w * w.transpose();
    let right = w.transpose() * w;
    (1..=n)
        .map(|j| {
            let j = f64::from(j);
            spd_power(&left, (nf - j) / nf) * z * spd_power(&right, (j - 1.0) / nf)
        })
        .fold(DMatrix::zeros(w.nrows(), w.ncols()), |acc, m| acc + m)
        / nf
}

/// Direct RK4 integration of `Ẇ = −𝒜_{N,W}(∂_W E)` in the matrix entries.
pub fn explicit_flow(n: u32, problem: &CompletionProblem, w0: &DMatrix<f64>, dt: f64, steps: usize) -> DMatrix<f64> {
    let f = |w: &DMatrix<f64>| -pushforward_explicit(n, w, &problem.euclid_grad_unchecked(w));
    let mut w = w0.clone();
    for _ in 0..steps {
        let k1 = f(&w);
        let k2 = f(&(&w + &k1 * (0.5 * dt)));
        let k3 = f(&(&w + &k2 * (0.5 * dt)));
        let k4 = f(&(&w + &k3 * dt));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    w
}

/// Central finite difference of the SVD along `W + hẆ`, with the singular
/// vectors of the shifted factorisations aligned in sign to `state`.
pub fn finite_difference_svd(state: &SvdState, wdot: &MatrixD, h: f64) -> Result<SvdDerivative> {
    let w = state.reconstruct();
    let shifted = |s: f64| -> Result<SvdState> {
        let m = MatrixD::new(&w + wdot.as_dmatrix() * s)?;
        Ok(align(svd(&m)?, state))
    };
    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    Ok(SvdDerivative {
        sigma_dot: (plus.sigma() - minus.sigma()) / (2.0 * h),
        u_dot: (plus.u() - minus.u()) / (2.0 * h),
        v_dot: (plus.v() - minus.v()) / (2.0 * h),
    })
}

fn align(mut s: SvdState, reference: &SvdState) -> SvdState {
    for i in 0..s.dim() {
        if s.u().column(i).dot(&reference.u().column(i)) < 0.0 {
            s.flip_pair(i);
        }
    }
    s
}

/// Euclidean gradient flow `Ẇ = −∂_W E` has the closed form
/// `W(t) = W0 + (1 − e^{−t}) 𝓑 ∘ (Φ − W0)`.
pub fn euclidean_flow_exact(problem: &CompletionProblem, w0: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    w0 - problem.euclid_grad_unchecked(w0) * (1.0 - (-t).exp())
}

/// `σ̇_i = u_iᵀ Ẇ v_i`.
pub fn sigma_dot_projection(state: &SvdState, wdot: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(state.dim(), |i, _| {
        state.u().column(i).dot(&(wdot * state.v().column(i)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_power_roundtrip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = spd_power(&a, 0.5);
        assert!((&r * &r - &a).norm() < 1e-13);
        assert!((spd_power(&a, 0.0) - DMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn depth_one_pushforward_is_identity() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.3, -1.0]);
        let z = DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.7, 0.4]);
        assert!((pushforward_explicit(1, &w, &z) - &z).norm() < 1e-14);
    }
}
