//! Depth-`N` geometry of the end-to-end matrix in SVD coordinates.
//!
//! The operator `𝒜_{N,W}` is diagonal in the basis `U E_il Vᵀ` with
//! eigenvalues `λ^N_il` ([`eigenvalues`]). The metric `g^N` has the
//! reciprocal eigenvalues and the dual metric `g^{N*}` applies `λ^N`
//! elementwise in rotated coordinates ([`apply_metric_dual`]).

mod metric;
mod spectrum;
mod volume;

pub use metric::{apply_metric_dual, dual_metric_matrix};
pub use spectrum::{eigenvalues, lambda_pair, SpectrumTable};
pub(crate) use spectrum::lambda_pair_logs;
pub use volume::{
    log_volume_density, log_volume_density_dw, log_volume_density_dw_for_depth, rank_one_volume_density,
};

use std::fmt;

use crate::error::{DlnError, Result};

/// Network depth: a positive integer or the infinite-depth limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    Finite(u32),
    Infinite,
}

impl Depth {
    pub fn finite(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(DlnError::invalid("depth must be at least 1"));
        }
        Ok(Depth::Finite(n))
    }

    /// `α = 1 − 1/N`, with `α = 1` at infinite depth.
    pub fn alpha(self) -> f64 {
        match self {
            Depth::Finite(n) => 1.0 - 1.0 / f64::from(n),
            Depth::Infinite => 1.0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Depth::Finite(_))
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(n) => write!(f, "{n}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Depth {
    type Err = DlnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "∞" => Ok(Depth::Infinite),
            other => other
                .parse::<u32>()
                .map_err(|_| DlnError::invalid(format!("cannot parse depth from {s:?}")))
                .and_then(Depth::finite),
        }
    }
}

/// Checks that every `σ_i` is finite and positive.
pub(crate) fn check_positive(sigma: &[f64]) -> Result<()> {
    if sigma.is_empty() {
        return Err(DlnError::invalid("empty singular value vector"));
    }
    for (i, s) in sigma.iter().enumerate() {
        if !(*s > 0.0) || !s.is_finite() {
            return Err(DlnError::RankCollapse { index: i + 1, value: *s });
        }
    }
    Ok(())
}

/// Checks that `σ` is positive and strictly decreasing.
pub(crate) fn check_distinct_positive(sigma: &[f64]) -> Result<()> {
    check_positive(sigma)?;
    for i in 0..sigma.len() - 1 {
        if !(sigma[i] > sigma[i + 1]) {
            return Err(DlnError::DegenerateSpectrum {
                i: i + 1,
                j: i + 2,
                gap: sigma[i] * sigma[i] - sigma[i + 1] * sigma[i + 1],
                tol: 0.0,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_alpha() {
        assert_eq!("inf".parse::<Depth>().unwrap(), Depth::Infinite);
        assert_eq!("5".parse::<Depth>().unwrap(), Depth::Finite(5));
        assert!("0".parse::<Depth>().is_err());
        assert_eq!(Depth::Finite(1).alpha(), 0.0);
        assert_eq!(Depth::Finite(4).alpha(), 0.75);
        assert_eq!(Depth::Infinite.alpha(), 1.0);
    }
}
