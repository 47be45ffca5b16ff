//! Monte Carlo volume comparison on the cyclic 3×3 problem: the mean `dW`
//! density in a small cube around the distinguished completion `M` against
//! the same quantity around random rank-two minimisers.

use dln_core::analysis::{mc_block, BlockSum, CycleTarget, FreeCoords, McEstimate, McVolumeSpec};
use dln_core::dynamics::CompletionProblem;
use dln_core::geometry::{log_volume_density, log_volume_density_dw_for_depth};
use dln_core::linalg::rng_from_seed;
use dln_core::{Depth, SvdState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DensityForm, ExperimentConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterEstimate {
    /// `M` or `competitor-<k>`.
    pub label: String,
    /// `(w12, w31, w23)`.
    pub coords: FreeCoords,
    pub mc_seed: u64,
    pub log_mean_density: f64,
    pub accepted: usize,
    pub drawn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeStudy {
    pub name: String,
    pub config_hash: String,
    pub density: DensityForm,
    pub cube_width: f64,
    pub sv_floor: f64,
    pub n_samples: usize,
    pub distinguished: CenterEstimate,
    pub competitors: Vec<CenterEstimate>,
    /// `log_mean_density(M) − max_k log_mean_density(competitor k)`.
    pub margin: f64,
}

impl VolumeStudy {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("studies always serialise") + "\n"
    }
}

/// Reads the six observed entries of a problem with the cyclic mask.
pub fn cycle_target(problem: &CompletionProblem) -> Result<CycleTarget> {
    let mask = CycleTarget::mask();
    let ok = problem.dim() == 3
        && (0..3).all(|i| (0..3).all(|j| problem.is_observed(i, j) == (mask[(i, j)] == 1.0)));
    if !ok {
        return Err(HarnessError::config(
            "volume-mc needs a 3x3 problem with exactly w12, w23, w31 unobserved",
        ));
    }
    let p = problem.phi();
    Ok(CycleTarget::new(p[(0, 0)], p[(0, 2)], p[(1, 0)], p[(1, 1)], p[(2, 1)], p[(2, 2)])?)
}

/// `M` first, then `n_competitors` minimisers drawn from `volume_mc.seed`.
/// Center `k` (with `M` at `k = 0`) samples with seed `volume_mc.seed + 1 + k`.
pub fn volume_study(config: &ExperimentConfig, jobs: usize) -> Result<VolumeStudy> {
    let resolved = config.resolve()?;
    let target = cycle_target(&resolved.problem)?;
    let v = &config.volume_mc;
    let depth = config.flow.depth;
    let form = config.heatmap.density;

    let mut rng = rng_from_seed(v.seed);
    let mut centers = vec![("M".to_string(), target.distinguished_point())];
    for k in 0..v.n_competitors {
        centers.push((format!("competitor-{}", k + 1), target.random_minimizer(v.competitor_sd, &mut rng)?));
    }
    let specs = centers
        .iter()
        .enumerate()
        .map(|(k, (_, coords))| {
            let seed = v.seed.wrapping_add(1 + k as u64);
            Ok(McVolumeSpec::new(target.matrix(*coords)?, 0.5 * v.cube_width, v.sv_floor, v.n_samples, seed)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let integrand = |s: &SvdState| match form {
        DensityForm::Dw => log_volume_density_dw_for_depth(depth, s.sigma_slice()),
        DensityForm::SigmaUv => log_volume_density(depth, s.sigma_slice()),
    };
    let tasks: Vec<(usize, usize)> = specs
        .iter()
        .enumerate()
        .flat_map(|(k, s)| (0..s.block_count()).map(move |b| (k, b)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start {jobs} workers: {e}")))?;
    let blocks: Vec<BlockSum> =
        pool.install(|| tasks.par_iter().map(|&(k, b)| mc_block(&specs[k], b, integrand)).collect());

    let mut sums = vec![BlockSum::default(); specs.len()];
    for (&(k, _), block) in tasks.iter().zip(blocks) {
        sums[k] = sums[k].merge(block);
    }
    let mut estimates = centers
        .into_iter()
        .zip(specs.iter())
        .zip(sums)
        .map(|(((label, coords), spec), sum)| {
            let est = McEstimate::from_sum(sum)?;
            Ok(CenterEstimate {
                label,
                coords,
                mc_seed: spec.seed,
                log_mean_density: est.log_mean_density,
                accepted: est.accepted,
                drawn: est.drawn,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distinguished = estimates.remove(0);
    let best = estimates.iter().map(|c| c.log_mean_density).fold(f64::NEG_INFINITY, f64::max);
    Ok(VolumeStudy {
        name: config.name.clone(),
        config_hash: config.hash(),
        density: form,
        cube_width: v.cube_width,
        sv_floor: v.sv_floor,
        n_samples: v.n_samples,
        margin: distinguished.log_mean_density - best,
        distinguished,
        competitors: estimates,
    })
}

/// Infinite-depth `dW` estimate at one center, evaluated serially.
pub fn single_center(target: &CycleTarget, coords: FreeCoords, cube_width: f64, sv_floor: f64, n: usize, seed: u64) -> Result<McEstimate> {
    let spec = McVolumeSpec::new(target.matrix(coords)?, 0.5 * cube_width, sv_floor, n, seed)?;
    Ok(dln_core::analysis::mc_volume_with(&spec, |s| log_volume_density_dw_for_depth(Depth::Infinite, s.sigma_slice()))?)
}
