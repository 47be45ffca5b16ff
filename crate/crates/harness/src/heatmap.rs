//! Log volume density over the minimiser plane of a 2×2 diagonal problem,
//! `W = [[Φ11, w12], [w21, Φ22]]`.

use dln_core::geometry::{log_volume_density, log_volume_density_dw_for_depth};
use dln_core::linalg::svd;
use dln_core::{Depth, DlnError, MatrixD};

use crate::config::{DensityForm, HeatmapSpec};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub w12: f64,
    pub w21: f64,
    pub log_density: Option<f64>,
    /// `ok`, `singular` or `degenerate`.
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Row-major over `(w12, w21)`: `w21` varies fastest.
    pub cells: Vec<HeatmapCell>,
}

pub fn heatmap_cell(
    depth: Depth,
    form: DensityForm,
    diag: (f64, f64),
    w12: f64,
    w21: f64,
    singular_ratio: f64,
) -> Result<HeatmapCell> {
    let w = MatrixD::from_row_major(2, &[diag.0, w12, w21, diag.1])?;
    let state = svd(&w)?;
    let s = state.sigma_slice();
    let cell = |log_density, status| HeatmapCell {
        w12,
        w21,
        log_density,
        status,
    };
    if s[1] <= singular_ratio * s[0] {
        return Ok(cell(None, "singular"));
    }
    let value = match form {
        DensityForm::Dw => log_volume_density_dw_for_depth(depth, s),
        DensityForm::SigmaUv => log_volume_density(depth, s),
    };
    match value {
        Ok(v) => Ok(cell(Some(v), "ok")),
        Err(DlnError::DegenerateSpectrum { .. }) => Ok(cell(None, "degenerate")),
        Err(DlnError::RankCollapse { .. }) => Ok(cell(None, "singular")),
        Err(e) => Err(e.into()),
    }
}

/// Cell centers `lo + (k + ½)(hi − lo)/resolution` on both axes.
pub fn compute_heatmap(depth: Depth, diag: (f64, f64), spec: &HeatmapSpec) -> Result<Heatmap> {
    let n = spec.resolution;
    let step = (spec.hi - spec.lo) / n as f64;
    let center = |k: usize| spec.lo + (k as f64 + 0.5) * step;
    let mut cells = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            cells.push(heatmap_cell(depth, spec.density, diag, center(a), center(b), spec.singular_ratio)?);
        }
    }
    Ok(Heatmap { cells })
}

/// Diagonal of a problem that observes exactly the diagonal of a 2×2 target.
pub fn diagonal_target(problem: &dln_core::dynamics::CompletionProblem) -> Result<(f64, f64)> {
    let ok = problem.dim() == 2
        && (0..2).all(|i| (0..2).all(|j| problem.is_observed(i, j) == (i == j)));
    if !ok {
        return Err(HarnessError::config(
            "heatmaps need a 2x2 problem observing exactly the diagonal",
        ));
    }
    Ok((problem.phi()[(0, 0)], problem.phi()[(1, 1)]))
}
