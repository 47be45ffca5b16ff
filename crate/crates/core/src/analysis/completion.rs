//! The 3×3 completion problem with free entries `w_12`, `w_23`, `w_31`:
//!
//! ```text
//! [ Φ11  w12  Φ13 ]
//! [ Φ21  Φ22  w23 ]
//! [ w31  Φ32  Φ33 ]
//! ```
//!
//! One step of LU elimination with pivot `Φ11` leaves the Schur complement
//!
//! ```text
//! [ Φ22 − Φ21 w12/Φ11   w23 − Φ13 Φ21/Φ11 ]
//! [ Φ32 − w31 w12/Φ11   Φ33 − w31 Φ13/Φ11 ]
//! ```
//!
//! and the completion has rank two exactly when its determinant vanishes.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use crate::dynamics::CompletionProblem;
use crate::error::{DlnError, Result};
use crate::linalg::{DlnRng, MatrixD};

/// Free coordinates in the order `(w12, w31, w23)`.
pub type FreeCoords = [f64; 3];

const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Observed entries of the cyclic 3×3 problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleTarget {
    pub phi11: f64,
    pub phi13: f64,
    pub phi21: f64,
    pub phi22: f64,
    pub phi32: f64,
    pub phi33: f64,
}

impl CycleTarget {
    pub const REFERENCE: CycleTarget = CycleTarget {
        phi11: -1.55795,
        phi13: 1.58397,
        phi21: 0.212869,
        phi22: 0.0337805,
        phi32: 1.32488,
        phi33: 1.92653,
    };

    /// Positions of `(w12, w31, w23)`.
    pub const FREE_POSITIONS: [(usize, usize); 3] = [(0, 1), (2, 0), (1, 2)];

    pub fn new(phi11: f64, phi13: f64, phi21: f64, phi22: f64, phi32: f64, phi33: f64) -> Result<Self> {
        let t = CycleTarget {
            phi11,
            phi13,
            phi21,
            phi22,
            phi32,
            phi33,
        };
        for (name, v) in [("phi11", phi11), ("phi13", phi13), ("phi33", phi33)] {
            if !(v.abs() > DENOMINATOR_FLOOR) || !v.is_finite() {
                return Err(DlnError::invalid(format!("{name} must be finite and nonzero, got {v}")));
            }
        }
        if ![phi21, phi22, phi32].iter().all(|v| v.is_finite()) {
            return Err(DlnError::invalid("observed entries must be finite"));
        }
        Ok(t)
    }

    pub fn matrix(&self, w: FreeCoords) -> Result<MatrixD> {
        let [w12, w31, w23] = w;
        MatrixD::from_row_major(
            3,
            &[self.phi11, w12, self.phi13, self.phi21, self.phi22, w23, w31, self.phi32, self.phi33],
        )
    }

    pub fn free_coords(m: &MatrixD) -> FreeCoords {
        Self::FREE_POSITIONS.map(|p| m[p])
    }

    pub fn mask() -> DMatrix<f64> {
        let mut mask = DMatrix::from_element(3, 3, 1.0);
        for p in Self::FREE_POSITIONS {
            mask[p] = 0.0;
        }
        mask
    }

    /// Completion problem with the free entries of `Φ` set to zero.
    pub fn problem(&self) -> Result<CompletionProblem> {
        CompletionProblem::new(self.matrix([0.0; 3])?, Self::mask())
    }

    /// Determinant of the Schur complement; zero on the rank-two completions.
    pub fn residual(&self, w: FreeCoords) -> f64 {
        let [w12, w31, w23] = w;
        let p = self;
        (p.phi33 - p.phi13 * w31 / p.phi11) * (p.phi22 - p.phi21 * w12 / p.phi11)
            - (p.phi32 - w31 * w12 / p.phi11) * (w23 - p.phi13 * p.phi21 / p.phi11)
    }

    /// The rank-two completion
    /// `w12 = Φ32Φ13/Φ33`, `w23 = Φ13Φ21/Φ11`, `w31 = Φ33Φ11/Φ13`.
    ///
    /// Both Schur-complement factors multiplying `w23` and its cofactor
    /// vanish here, so [`rank_two_completions`] cannot reach this point.
    pub fn distinguished_point(&self) -> FreeCoords {
        [
            self.phi32 * self.phi13 / self.phi33,
            self.phi33 * self.phi11 / self.phi13,
            self.phi13 * self.phi21 / self.phi11,
        ]
    }

    /// A rank-one completion needs the whole Schur complement to vanish,
    /// which pins `w12`, `w31` and then forces `Φ32 = Φ33Φ22Φ11/(Φ13Φ21)`.
    pub fn rank_one_completion_exists(&self, tol: f64) -> bool {
        if self.phi21 == 0.0 {
            return self.phi22.abs() <= tol;
        }
        let required = self.phi33 * self.phi22 * self.phi11 / (self.phi13 * self.phi21);
        (self.phi32 - required).abs() <= tol
    }

    /// Draws `w12, w31 ~ normal(0, sd)` and completes to rank two, redrawing
    /// while the solve is degenerate.
    pub fn random_minimizer(&self, sd: f64, rng: &mut DlnRng) -> Result<FreeCoords> {
        let normal = Normal::new(0.0, sd).map_err(|e| DlnError::invalid(e.to_string()))?;
        for _ in 0..1000 {
            let w12 = normal.sample(rng);
            let w31 = normal.sample(rng);
            if let Ok(w23) = rank_two_completions(self, w12, w31) {
                return Ok([w12, w31, w23]);
            }
        }
        Err(DlnError::DegenerateDenominator {
            context: "random rank-two minimizer",
            value: 0.0,
        })
    }
}

/// Solves the rank-two relation for `w23`.
pub fn rank_two_completions(target: &CycleTarget, w12: f64, w31: f64) -> Result<f64> {
    let p = target;
    let pivot = p.phi22 - p.phi21 * w12 / p.phi11;
    if !(pivot.abs() > DENOMINATOR_FLOOR) {
        return Err(DlnError::DegenerateDenominator {
            context: "phi22 - phi21 w12 / phi11",
            value: pivot,
        });
    }
    let coupling = p.phi32 - w31 * w12 / p.phi11;
    if !(coupling.abs() > DENOMINATOR_FLOOR) {
        return Err(DlnError::DegenerateDenominator {
            context: "phi32 - w31 w12 / phi11",
            value: coupling,
        });
    }
    Ok(p.phi13 * p.phi21 / p.phi11 + (p.phi33 - p.phi13 * w31 / p.phi11) * pivot / coupling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rng_from_seed, svd};

    fn rank_ratio(t: &CycleTarget, w: FreeCoords) -> f64 {
        let s = svd(&t.matrix(w).unwrap()).unwrap();
        s.sigma()[2] / s.sigma()[0]
    }

    #[test]
    fn distinguished_point_has_rank_two() {
        let t = CycleTarget::REFERENCE;
        let m = t.distinguished_point();
        assert!(t.residual(m).abs() < 1e-14);
        assert!(rank_ratio(&t, m) <= 1e-10);
        let s = svd(&t.matrix(m).unwrap()).unwrap();
        assert!(s.sigma()[1] > 0.1);
        assert!(rank_two_completions(&t, m[0], m[1]).is_err());
    }

    #[test]
    fn solved_completions_have_rank_two() {
        let t = CycleTarget::REFERENCE;
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let w = t.random_minimizer(10.0, &mut rng).unwrap();
            assert!(t.residual(w).abs() < 1e-9 * (1.0 + w[2].abs()));
            assert!(rank_ratio(&t, w) <= 1e-10, "{w:?}");
        }
    }

    #[test]
    fn no_rank_one_completion() {
        let t = CycleTarget::REFERENCE;
        assert!(!t.rank_one_completion_exists(1e-6));
        let required = t.phi33 * t.phi22 * t.phi11 / (t.phi13 * t.phi21);
        assert!((required + 0.3007).abs() < 1e-3);
        let consistent = CycleTarget { phi32: required, ..t };
        assert!(consistent.rank_one_completion_exists(1e-12));
    }

    #[test]
    fn problem_observes_six_entries() {
        let p = CycleTarget::REFERENCE.problem().unwrap();
        assert_eq!(p.unobserved_count(), 3);
        let m = CycleTarget::REFERENCE.matrix(CycleTarget::REFERENCE.distinguished_point()).unwrap();
        assert!(p.is_minimizer(&m, 0.0));
        assert_eq!(CycleTarget::free_coords(&m), CycleTarget::REFERENCE.distinguished_point());
    }
}
