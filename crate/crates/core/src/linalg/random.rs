use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::MatrixD;
use crate::error::{DlnError, Result};

/// Generator used for every seeded draw in the crate.
pub type DlnRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DlnRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ensemble of `d × d` matrices with i.i.d. `normal(mu, sd)` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec {
    mu: f64,
    sd: f64,
    d: usize,
}

impl WignerSpec {
    pub fn new(mu: f64, sd: f64, d: usize) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(DlnError::invalid(format!("Wigner standard deviation must be positive, got {sd}")));
        }
        if !mu.is_finite() {
            return Err(DlnError::invalid("Wigner mean must be finite"));
        }
        if d == 0 {
            return Err(DlnError::invalid("Wigner dimension must be positive"));
        }
        Ok(WignerSpec { mu, sd, d })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Draws from an existing generator; entries are filled row by row.
    pub fn sample_with(&self, rng: &mut DlnRng) -> MatrixD {
        let normal = Normal::new(self.mu, self.sd).expect("validated in WignerSpec::new");
        let entries: Vec<f64> = (0..self.d * self.d).map(|_| normal.sample(rng)).collect();
        MatrixD::from_row_major(self.d, &entries).expect("normal draws are finite")
    }
}

/// One Wigner draw, fully determined by `seed`.
pub fn sample_wigner(spec: &WignerSpec, seed: u64) -> MatrixD {
    spec.sample_with(&mut rng_from_seed(seed))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `R`'s diagonal absorbed into `Q`).
pub fn random_orthogonal(d: usize, rng: &mut DlnRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let spec = WignerSpec::new(0.0, 0.001, 2).unwrap();
        assert_eq!(sample_wigner(&spec, 7), sample_wigner(&spec, 7));
        assert_ne!(sample_wigner(&spec, 7), sample_wigner(&spec, 8));
    }

    #[test]
    fn empirical_standard_deviation() {
        let spec = WignerSpec::new(0.0, 0.001, 20).unwrap();
        let mut rng = rng_from_seed(11);
        let mut xs = Vec::with_capacity(100_000);
        while xs.len() < 100_000 {
            xs.extend(spec.sample_with(&mut rng).to_row_major());
        }
        xs.truncate(100_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.001).abs() < 1e-4, "sd = {}", var.sqrt());
    }

    #[test]
    fn zero_sd_rejected() {
        assert!(WignerSpec::new(0.0, 0.0, 2).is_err());
        assert!(WignerSpec::new(0.0, -1.0, 2).is_err());
    }

    #[test]
    fn orthogonal_sample() {
        let q = random_orthogonal(5, &mut rng_from_seed(1));
        assert!(super::super::orthogonality_defect(&q) < 1e-12);
    }
}
