use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CycleTarget;
use crate::error::{DlnError, Result};
use crate::geometry::log_volume_density_dw;
use crate::linalg::{svd_dmatrix, MatrixD, SvdState};

/// Samples per independently seeded block.
pub const MC_BLOCK: usize = 4096;

/// Uniform sampling of a cube around `center` in the free coordinates,
/// restricted to matrices with smallest singular value above `sv_floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct McVolumeSpec {
    pub center: MatrixD,
    pub free_positions: Vec<(usize, usize)>,
    pub cube_half_width: f64,
    pub sv_floor: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McVolumeSpec {
    /// Free coordinates default to the three unobserved entries of the cyclic
    /// 3×3 problem.
    pub fn new(center: MatrixD, cube_half_width: f64, sv_floor: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let spec = McVolumeSpec {
            center,
            free_positions: CycleTarget::FREE_POSITIONS.to_vec(),
            cube_half_width,
            sv_floor,
            n_samples,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_free_positions(mut self, positions: Vec<(usize, usize)>) -> Result<Self> {
        self.free_positions = positions;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cube_half_width > 0.0) || !(self.sv_floor > 0.0) || self.n_samples == 0 {
            return Err(DlnError::invalid(format!(
                "need H/2 > 0, h > 0 and at least one sample (got {}, {}, {})",
                self.cube_half_width, self.sv_floor, self.n_samples
            )));
        }
        let d = self.center.dim();
        if self.free_positions.is_empty() || self.free_positions.iter().any(|&(r, c)| r >= d || c >= d) {
            return Err(DlnError::invalid("free positions must be nonempty and inside the matrix"));
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        self.n_samples.div_ceil(MC_BLOCK)
    }
}

/// Log-sum-exp accumulator over the accepted samples of one or more blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSum {
    max: f64,
    scaled: f64,
    pub accepted: usize,
    pub drawn: usize,
}

impl Default for BlockSum {
    fn default() -> Self {
        BlockSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
            accepted: 0,
            drawn: 0,
        }
    }
}

impl BlockSum {
    fn push(&mut self, log_value: f64) {
        if log_value > self.max {
            self.scaled = self.scaled * (self.max - log_value).exp() + 1.0;
            self.max = log_value;
        } else {
            self.scaled += (log_value - self.max).exp();
        }
        self.accepted += 1;
    }

    pub fn merge(mut self, other: BlockSum) -> BlockSum {
        if other.accepted > 0 {
            if other.max > self.max {
                self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
                self.max = other.max;
            } else {
                self.scaled += other.scaled * (other.max - self.max).exp();
            }
        }
        self.accepted += other.accepted;
        self.drawn += other.drawn;
        self
    }

    /// `log` of the sum of the accepted values.
    pub fn log_sum(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub log_mean_density: f64,
    pub accepted: usize,
    pub drawn: usize,
}

impl McEstimate {
    pub fn from_sum(sum: BlockSum) -> Result<Self> {
        if sum.accepted == 0 {
            return Err(DlnError::NoAcceptedSamples { drawn: sum.drawn });
        }
        Ok(McEstimate {
            log_mean_density: sum.log_sum() - (sum.accepted as f64).ln(),
            accepted: sum.accepted,
            drawn: sum.drawn,
        })
    }
}

/// Mean of the infinite-depth `dW` density over the accepted samples.
pub fn mc_volume(spec: &McVolumeSpec) -> Result<McEstimate> {
    mc_volume_with(spec, |s| log_volume_density_dw(s.sigma_slice()))
}

/// Mean of `exp(log_integrand)`. Samples on which the integrand fails are
/// rejected like those below the singular value floor.
pub fn mc_volume_with(spec: &McVolumeSpec, log_integrand: impl Fn(&SvdState) -> Result<f64>) -> Result<McEstimate> {
    spec.validate()?;
    let sum = (0..spec.block_count())
        .map(|b| mc_block(spec, b, &log_integrand))
        .fold(BlockSum::default(), BlockSum::merge);
    McEstimate::from_sum(sum)
}

/// One block of samples. Block `b` draws from its own ChaCha stream, so
/// blocks can be evaluated in any order or in parallel and merged in index
/// order with identical results.
pub fn mc_block(spec: &McVolumeSpec, block: usize, log_integrand: impl Fn(&SvdState) -> Result<f64>) -> BlockSum {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(block as u64);
    let start = block * MC_BLOCK;
    let count = MC_BLOCK.min(spec.n_samples.saturating_sub(start));
    let hw = spec.cube_half_width;
    let mut w = spec.center.as_dmatrix().clone();
    let mut sum = BlockSum::default();
    for _ in 0..count {
        for &(r, c) in &spec.free_positions {
            w[(r, c)] = spec.center[(r, c)] + rng.random_range(-hw..hw);
        }
        sum.drawn += 1;
        let Ok(state) = svd_dmatrix(&w) else { continue };
        if !(state.sigma()[state.dim() - 1] > spec.sv_floor) {
            continue;
        }
        if let Ok(v) = log_integrand(&state) {
            if v.is_finite() {
                sum.push(v);
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, h: f64) -> McVolumeSpec {
        let t = CycleTarget::REFERENCE;
        let center = t.matrix(t.distinguished_point()).unwrap();
        McVolumeSpec::new(center, 5e-4, h, n, 11).unwrap()
    }

    #[test]
    fn constant_density_is_recovered() {
        let est = mc_volume_with(&spec(5000, 1e-5), |_| Ok(0.0)).unwrap();
        assert!(est.log_mean_density.abs() < 1e-12);
        assert!(est.accepted > 0 && est.accepted <= est.drawn);
        assert_eq!(est.drawn, 5000);
    }

    #[test]
    fn doubling_the_integrand_doubles_the_mean() {
        let s = spec(3000, 1e-5);
        let a = mc_volume(&s).unwrap();
        let b = mc_volume_with(&s, |st| Ok(log_volume_density_dw(st.sigma_slice())? + 2f64.ln())).unwrap();
        assert!((b.log_mean_density - a.log_mean_density - 2f64.ln()).abs() < 1e-10);
        assert_eq!(a.accepted, b.accepted);
    }

    #[test]
    fn deterministic_and_block_order_independent() {
        let s = spec(3 * MC_BLOCK + 17, 1e-5);
        let f = |st: &SvdState| log_volume_density_dw(st.sigma_slice());
        let a = mc_volume_with(&s, f).unwrap();
        let b = mc_volume_with(&s, f).unwrap();
        assert_eq!(a, b);
        let blocks: Vec<BlockSum> = (0..s.block_count()).rev().map(|i| mc_block(&s, i, f)).collect();
        let merged = blocks.into_iter().rev().fold(BlockSum::default(), BlockSum::merge);
        assert_eq!(McEstimate::from_sum(merged).unwrap(), a);
    }

    #[test]
    fn impossible_floor_rejects_everything() {
        assert!(matches!(mc_volume(&spec(100, 10.0)), Err(DlnError::NoAcceptedSamples { drawn: 100 })));
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let values = [-3.0, 1.5, 0.2, 7.0, -20.0];
        let mut a = BlockSum::default();
        for v in values {
            a.push(v);
        }
        let direct: f64 = values.iter().map(|v| v.exp()).sum();
        assert!((a.log_sum() - direct.ln()).abs() < 1e-13);
    }
}
