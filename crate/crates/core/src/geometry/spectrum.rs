use nalgebra::DMatrix;

use super::{Depth, check_positive};
use crate::error::Result;

/// Below this `|log(σ_i²/σ_l²)|` the finite-depth eigenvalue is summed term by
/// term instead of through the geometric-series closed form.
const FINITE_SUM_SWITCH: f64 = 1e-3;
/// Below this `|log(σ_i/σ_l)|` the infinite-depth eigenvalue uses its series.
const INFINITE_SERIES_SWITCH: f64 = 1e-6;

/// The `d²` eigenvalues `λ_il` of `𝒜_{N,W}` at a given spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    depth: Depth,
    sigma: Vec<f64>,
    lambda: DMatrix<f64>,
}

impl SpectrumTable {
    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.lambda[(i, l)]
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }
}

/// Eigenvalue table for positive singular values.
///
/// Finite `N`: `λ_il = (1/N) Σ_{j=1}^N (σ_i²)^{(N−j)/N} (σ_l²)^{(j−1)/N}`.
/// Infinite depth: `λ_il = (σ_i² − σ_l²) / log(σ_i²/σ_l²)` and `λ_ii = σ_i²`.
pub fn eigenvalues(depth: Depth, sigma: &[f64]) -> Result<SpectrumTable> {
    check_positive(sigma)?;
    Ok(table_unchecked(depth, sigma))
}

/// Also accepts zero singular values; used on the fixed-rank manifolds.
pub(crate) fn table_unchecked(depth: Depth, sigma: &[f64]) -> SpectrumTable {
    let d = sigma.len();
    let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    let logs: Vec<f64> = sq.iter().map(|x| x.ln()).collect();
    let mut lambda = DMatrix::zeros(d, d);
    for i in 0..d {
        for l in i..d {
            let x = lambda_pair_logs(depth, sq[i], logs[i], sq[l], logs[l]);
            lambda[(i, l)] = x;
            lambda[(l, i)] = x;
        }
    }
    SpectrumTable {
        depth,
        sigma: sigma.to_vec(),
        lambda,
    }
}

/// `λ` for one pair of squared singular values `a = σ_i²`, `b = σ_l²`.
///
/// Symmetric in its arguments. Zero arguments are allowed; `0⁰` is taken as
/// one, so `λ^N(a, 0) = a^{(N−1)/N} / N`.
pub fn lambda_pair(depth: Depth, a: f64, b: f64) -> f64 {
    lambda_pair_logs(depth, a, a.ln(), b, b.ln())
}

/// [`lambda_pair`] with precomputed `log a`, `log b` (may be `-∞`).
pub(crate) fn lambda_pair_logs(depth: Depth, a: f64, log_a: f64, b: f64, log_b: f64) -> f64 {
    let (hi, log_hi, lo, log_lo) = if a >= b { (a, log_a, b, log_b) } else { (b, log_b, a, log_a) };
    match depth {
        Depth::Finite(1) => 1.0,
        Depth::Finite(n) => finite_pair(n, hi, log_hi, log_lo),
        Depth::Infinite => infinite_pair(hi, lo, log_hi, log_lo),
    }
}

fn finite_pair(n: u32, hi: f64, log_hi: f64, log_lo: f64) -> f64 {
    if hi == 0.0 {
        return 0.0;
    }
    let nf = f64::from(n);
    let lead = ((nf - 1.0) / nf * log_hi).exp();
    // x = log(lo / hi) ≤ 0
    let x = log_lo - log_hi;
    if x == 0.0 {
        lead
    } else if x.abs() > FINITE_SUM_SWITCH {
        lead / nf * (x.exp_m1() / (x / nf).exp_m1())
    } else {
        let q = (x / nf).exp();
        let mut term = 1.0;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += term;
            term *= q;
        }
        lead * sum / nf
    }
}

fn infinite_pair(hi: f64, lo: f64, log_hi: f64, log_lo: f64) -> f64 {
    if lo == 0.0 {
        return 0.0;
    }
    // y = log(hi / lo) ≥ 0
    let y = log_hi - log_lo;
    if y == 0.0 {
        hi
    } else if 0.5 * y < INFINITE_SERIES_SWITCH {
        lo * (1.0 + y / 2.0 + y * y / 6.0)
    } else {
        lo * y.exp_m1() / y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng_from_seed;
    use rand::Rng;

    /// Term-by-term evaluation of the defining sum.
    fn brute_force(n: u32, a: f64, b: f64) -> f64 {
        let nf = f64::from(n);
        (1..=n)
            .map(|j| a.powf((nf - f64::from(j)) / nf) * b.powf((f64::from(j) - 1.0) / nf))
            .sum::<f64>()
            / nf
    }

    #[test]
    fn depth_one_is_euclidean() {
        let t = eigenvalues(Depth::Finite(1), &[3.0, 0.5, 0.1]).unwrap();
        assert!(t.lambda().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn depth_two_example() {
        let t = eigenvalues(Depth::Finite(2), &[2.0, 1.0]).unwrap();
        assert!((t.get(0, 1) - 1.5).abs() < 1e-15);
        assert!((t.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_depth_example() {
        let e = std::f64::consts::E;
        let t = eigenvalues(Depth::Infinite, &[e, 1.0]).unwrap();
        assert!((t.get(0, 1) - (e * e - 1.0) / 2.0).abs() < 1e-14);
        assert!((t.get(0, 1) - 3.194528).abs() < 1e-6);
        assert_eq!(t.get(1, 1), 1.0);
    }

    #[test]
    fn closed_form_matches_brute_force() {
        let mut rng = rng_from_seed(2);
        for _ in 0..500 {
            let n = rng.random_range(2..60);
            let a: f64 = rng.random_range(1e-4..10.0);
            let b: f64 = if rng.random_bool(0.3) { a * (1.0 + rng.random_range(-1e-4..1e-4)) } else { rng.random_range(1e-4..10.0) };
            let got = lambda_pair(Depth::Finite(n), a, b);
            let want = brute_force(n, a, b);
            assert!((got - want).abs() <= 1e-12 * want, "n={n} a={a} b={b}: {got} vs {want}");
        }
    }

    #[test]
    fn continuity_near_degeneracy() {
        let s = 1.7;
        let t = eigenvalues(Depth::Infinite, &[s * (1.0 + 1e-9), s]).unwrap();
        assert!((t.get(0, 1) - s * s).abs() <= 1e-6 * s * s);
        // series and closed form agree across the switch
        let below = lambda_pair(Depth::Infinite, 1.0 + 1.9e-6, 1.0);
        let above = lambda_pair(Depth::Infinite, 1.0 + 2.1e-6, 1.0);
        assert!((above - below - 0.1e-6).abs() < 1e-12);
    }

    #[test]
    fn zero_singular_value() {
        assert!((lambda_pair(Depth::Finite(4), 16.0, 0.0) - 8.0 / 4.0).abs() < 1e-15);
        assert_eq!(lambda_pair(Depth::Infinite, 4.0, 0.0), 0.0);
        assert!(eigenvalues(Depth::Infinite, &[1.0, 0.0]).is_err());
    }
}
