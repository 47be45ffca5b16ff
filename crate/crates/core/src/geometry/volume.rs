//! Volume densities of `g^N`, all in log space.
//!
//! With respect to `dΣ dU dV`:
//!
//! ```text
//! N < ∞ :  N^{d(d−1)/2} det(Σ²)^{(1−N)/(2N)} van(Σ^{2/N})
//! N = ∞ :  van(log Σ²) / √det(Σ²)
//! ```
//!
//! Dividing by the SVD Jacobian `van(Σ²)` gives the density with respect to
//! Lebesgue measure `dW`.

use super::{check_distinct_positive, Depth};
use crate::error::{DlnError, Result};

/// `log` of the density of `g^N` with respect to `dΣ dU dV`.
pub fn log_volume_density(depth: Depth, sigma: &[f64]) -> Result<f64> {
    check_distinct_positive(sigma)?;
    let d = sigma.len();
    let logs: Vec<f64> = sigma.iter().map(|s| s.ln()).collect();
    let sum_log_sq: f64 = 2.0 * logs.iter().sum::<f64>();
    Ok(match depth {
        Depth::Finite(n) => {
            let nf = f64::from(n);
            let pairs = (d * (d - 1) / 2) as f64;
            let mut van = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    // σ_i^{2/N} − σ_j^{2/N} = σ_j^{2/N} expm1((2/N) log(σ_i/σ_j))
                    van += 2.0 / nf * logs[j] + (2.0 / nf * (logs[i] - logs[j])).exp_m1().ln();
                }
            }
            pairs * nf.ln() + (1.0 - nf) / (2.0 * nf) * sum_log_sq + van
        }
        Depth::Infinite => {
            let mut van = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    van += (2.0 * (logs[i] - logs[j])).ln();
                }
            }
            van - 0.5 * sum_log_sq
        }
    })
}

/// `log` of the infinite-depth density with respect to `dW`,
/// `van(log Σ²) / (√det(Σ²) van(Σ²))`.
pub fn log_volume_density_dw(sigma: &[f64]) -> Result<f64> {
    log_volume_density_dw_for_depth(Depth::Infinite, sigma)
}

/// `log` of the density with respect to `dW` at any depth.
pub fn log_volume_density_dw_for_depth(depth: Depth, sigma: &[f64]) -> Result<f64> {
    let base = log_volume_density(depth, sigma)?;
    let mut log_van_sq = 0.0;
    for i in 0..sigma.len() {
        for j in i + 1..sigma.len() {
            log_van_sq += (sigma[i] - sigma[j]).ln() + (sigma[i] + sigma[j]).ln();
        }
    }
    Ok(base - log_van_sq)
}

/// Density `N / σ^{3(N−1)/N}` of the depth-`N` metric restricted to rank-one
/// `2 × 2` matrices with singular value `σ`.
pub fn rank_one_volume_density(depth: Depth, sigma: f64) -> Result<f64> {
    let n = match depth {
        Depth::Finite(n) => f64::from(n),
        Depth::Infinite => {
            return Err(DlnError::Unsupported(
                "the rank-one volume form is only defined at finite depth".into(),
            ))
        }
    };
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(DlnError::RankCollapse { index: 1, value: sigma });
    }
    Ok(n / sigma.powf(3.0 * (n - 1.0) / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vandermonde;

    /// Direct (non-log) evaluation of the closed forms.
    fn direct(depth: Depth, s: &[f64]) -> f64 {
        let det_sq: f64 = s.iter().map(|x| x * x).product();
        let d = s.len() as i32;
        match depth {
            Depth::Finite(n) => {
                let nf = f64::from(n);
                let p: Vec<f64> = s.iter().map(|x| x.powf(2.0 / nf)).collect();
                nf.powi(d * (d - 1) / 2) * det_sq.powf((1.0 - nf) / (2.0 * nf)) * vandermonde(&p)
            }
            Depth::Infinite => {
                let l: Vec<f64> = s.iter().map(|x| (x * x).ln()).collect();
                vandermonde(&l) / det_sq.sqrt()
            }
        }
    }

    #[test]
    fn single_value() {
        let got = log_volume_density(Depth::Infinite, &[3.0]).unwrap();
        assert!((got - (1.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_infinite() {
        let got = log_volume_density(Depth::Infinite, &[2.0, 1.0]).unwrap();
        assert!((got - (4f64.ln() / 2.0).ln()).abs() < 1e-14);
        assert!((got + 0.366513).abs() < 1e-6);
    }

    #[test]
    fn two_by_two_dw() {
        let got = log_volume_density_dw(&[2.0, 1.0]).unwrap();
        let expected = 4f64.ln().ln() - 2f64.ln() - 3f64.ln();
        assert!((got - expected).abs() < 1e-14);
        assert!((got + 1.4651252).abs() < 1e-7);
    }

    #[test]
    fn matches_direct_evaluation() {
        let s = [3.1, 1.2, 0.7, 0.05];
        for depth in [Depth::Finite(1), Depth::Finite(2), Depth::Finite(7), Depth::Infinite] {
            let got = log_volume_density(depth, &s).unwrap();
            let want = direct(depth, &s).ln();
            assert!((got - want).abs() < 1e-12, "{depth}: {got} vs {want}");
        }
    }

    #[test]
    fn finite_depth_converges_like_one_over_n() {
        let inf = log_volume_density(Depth::Infinite, &[2.0, 1.0]).unwrap().exp();
        let diffs: Vec<f64> = [10u32, 100, 1000, 10000]
            .iter()
            .map(|&n| (log_volume_density(Depth::Finite(n), &[2.0, 1.0]).unwrap().exp() - inf).abs())
            .collect();
        for w in diffs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((8.0..12.5).contains(&ratio), "ratio {ratio}, diffs {diffs:?}");
        }
    }

    #[test]
    fn log_vandermonde_shift_invariance() {
        let s = [2.5, 1.1, 0.3];
        let c: f64 = 7.3;
        let logs = |v: &[f64]| v.iter().map(|x| (x * x).ln()).collect::<Vec<_>>();
        let scaled: Vec<f64> = s.iter().map(|x| c * x).collect();
        let a = crate::linalg::log_vandermonde(&logs(&s));
        let b = crate::linalg::log_vandermonde(&logs(&scaled));
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn blows_up_as_smallest_value_vanishes() {
        let mut prev = f64::NEG_INFINITY;
        for k in 3..12 {
            let s2 = 10f64.powi(-k);
            let cur = log_volume_density_dw(&[1.5, s2]).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
        assert!(prev > 20.0);
    }

    #[test]
    fn repeated_values_rejected() {
        assert!(matches!(
            log_volume_density(Depth::Finite(3), &[1.0, 1.0]),
            Err(DlnError::DegenerateSpectrum { .. })
        ));
        assert!(log_volume_density_dw(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn rank_one_density() {
        assert_eq!(rank_one_volume_density(Depth::Finite(1), 5.0).unwrap(), 1.0);
        let got = rank_one_volume_density(Depth::Finite(20), 2.0).unwrap();
        assert!((got - 20.0 * 2f64.powf(-2.85)).abs() < 1e-13);
        assert!((got - 2.774).abs() < 1e-3);
        assert!(rank_one_volume_density(Depth::Finite(5), 1.0).unwrap() > rank_one_volume_density(Depth::Finite(5), 1.1).unwrap());
        assert!(matches!(rank_one_volume_density(Depth::Infinite, 1.0), Err(DlnError::Unsupported(_))));
    }
}
