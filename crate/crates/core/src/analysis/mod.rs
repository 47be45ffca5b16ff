//! Post-processing of flow outcomes and the quantities used to interpret
//! them: effective rank, linearised attraction rates, the 2×2 hyperbola
//! asymptotics, the 3×3 rank-two completion family and Monte Carlo volumes.

mod completion;
mod hyperbola;
mod mc;
mod rates;

pub use completion::{rank_two_completions, CycleTarget, FreeCoords};
pub use hyperbola::{
    hyperbola_asymptotics, hyperbola_matrix, hyperbola_normal, sigma2_coefficient, HyperbolaPoint,
};
pub use mc::{mc_block, mc_volume, mc_volume_with, BlockSum, McEstimate, McVolumeSpec, MC_BLOCK};
pub use rates::{attraction_rates, RateBounds, RateChain};

use crate::error::{DlnError, Result};

/// `exp(−Σ s_i log s_i)` with `s_i = σ_i / Σ σ_j`.
pub fn effective_rank(sigma: &[f64]) -> Result<f64> {
    if let Some(bad) = sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(DlnError::invalid(format!("singular values must be finite and nonnegative, got {bad}")));
    }
    let total: f64 = sigma.iter().sum();
    if !(total > 0.0) {
        return Err(DlnError::invalid("effective rank of the zero matrix is undefined"));
    }
    let entropy: f64 = sigma
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| {
            let p = s / total;
            -p * p.ln()
        })
        .sum();
    Ok(entropy.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_rank_examples() {
        assert!((effective_rank(&[1.0, 1.0, 1.0]).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(effective_rank(&[2.5, 0.0, 0.0]).unwrap(), 1.0);
        let want = (0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4f64.ln()).exp();
        let got = effective_rank(&[3.0, 1.0]).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 1.754765).abs() < 1e-6);
    }

    #[test]
    fn effective_rank_rejects_zero() {
        assert!(effective_rank(&[0.0, 0.0]).is_err());
        assert!(effective_rank(&[1.0, -0.1]).is_err());
    }
}
