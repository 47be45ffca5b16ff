//! Named experiment configurations.

use dln_core::analysis::CycleTarget;
use dln_core::Depth;

use crate::config::{
    ArtifactKind, ExperimentConfig, FlowSpec, HeatmapSpec, HistogramQuantity, HistogramSpec, InitSpec, ProblemSpec,
    VolumeMcSpec,
};
use crate::error::{HarnessError, Result};

pub const NAMES: [&str; 5] = ["diag-d2", "diag-d20", "upper-T", "cycle-3x3", "rank1-manifold"];

/// Diagonal of the 2×2 target.
pub const DIAG_D2: [f64; 2] = [0.58724, 1.447];

/// Upper-triangular target with the lower-left entry unobserved.
pub const UPPER_T: [[f64; 2]; 2] = [[0.58724, 1.2], [0.0, 1.447]];

pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const INFO: [PresetInfo; 5] = [
    PresetInfo {
        name: "diag-d2",
        description: "2x2 diagonal completion: only the diagonal diag(0.58724, 1.447) is observed; \
                      rank-one minimisers form the hyperbola w12 w21 = 0.58724 * 1.447",
    },
    PresetInfo {
        name: "diag-d20",
        description: "d x d diagonal completion (default d = 20) with diagonal spaced evenly in [0.5, 1.5]; \
                      300 runs, convergence at E < 1e-6",
    },
    PresetInfo {
        name: "upper-T",
        description: "2x2 completion observing w11, w12, w22; the unique rank-one minimiser has \
                      w21 = Phi11 Phi22 / Phi12",
    },
    PresetInfo {
        name: "cycle-3x3",
        description: "3x3 completion with w12, w23, w31 unobserved; every minimiser of rank two, \
                      with a distinguished point M; Wigner(0, 0.02) initialisation",
    },
    PresetInfo {
        name: "rank1-manifold",
        description: "the diag-d2 problem at depth 20 with rank-one initialisations, integrated on the \
                      rank-one manifold; the minimal singular value there is 0.58724 + 1.447",
    },
];

fn unknown(name: &str) -> HarnessError {
    HarnessError::config(format!("unknown preset {name:?}; known presets: {}", NAMES.join(", ")))
}

/// Target rows and observation mask rows of a preset.
pub fn problem_rows(name: &str, dim: Option<usize>) -> Result<(Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    if dim.is_some() && name != "diag-d20" {
        return Err(HarnessError::config(format!("preset {name} has a fixed dimension")));
    }
    let diagonal = |values: &[f64]| {
        let d = values.len();
        let phi = (0..d).map(|i| (0..d).map(|j| if i == j { values[i] } else { 0.0 }).collect()).collect();
        let mask = (0..d).map(|i| (0..d).map(|j| i == j).collect()).collect();
        (phi, mask)
    };
    Ok(match name {
        "diag-d2" | "rank1-manifold" => diagonal(&DIAG_D2),
        "diag-d20" => {
            let d = dim.unwrap_or(20);
            if d < 2 {
                return Err(HarnessError::config("diag-d20 needs dim >= 2"));
            }
            let values: Vec<f64> = (0..d).map(|i| 0.5 + i as f64 / (d - 1) as f64).collect();
            diagonal(&values)
        }
        "upper-T" => (
            UPPER_T.iter().map(|r| r.to_vec()).collect(),
            vec![vec![true, true], vec![false, true]],
        ),
        "cycle-3x3" => {
            let t = CycleTarget::REFERENCE;
            let phi = t.matrix([0.0; 3]).expect("reference target is finite");
            let mask = CycleTarget::mask();
            (
                (0..3).map(|i| (0..3).map(|j| phi[(i, j)]).collect()).collect(),
                (0..3).map(|i| (0..3).map(|j| mask[(i, j)] == 1.0).collect()).collect(),
            )
        }
        _ => return Err(unknown(name)),
    })
}

/// The full default configuration of a preset.
pub fn default_config(name: &str) -> Result<ExperimentConfig> {
    let flow = |depth, max_time, energy_tol| FlowSpec {
        depth,
        dt: 0.01,
        max_time,
        energy_tol,
        gap_tol: dln_core::linalg::DEFAULT_GAP_TOL,
    };
    let init = |sd, rank_one| InitSpec { mu: 0.0, sd, rank_one };
    let hist = |quantity, lo, hi, width| HistogramSpec { quantity, lo, hi, width };
    let outputs = vec![ArtifactKind::RunsCsv, ArtifactKind::Histogram, ArtifactKind::Summary];
    let base = |flow, init, n_runs, histogram| ExperimentConfig {
        name: name.to_string(),
        problem: ProblemSpec::preset(name),
        flow,
        init,
        n_runs,
        seed_base: 0,
        outputs: outputs.clone(),
        histogram,
        heatmap: HeatmapSpec::default(),
        volume_mc: VolumeMcSpec::default(),
    };
    Ok(match name {
        "diag-d2" => base(
            flow(Depth::Infinite, 1200.0, 1e-15),
            init(0.001, false),
            3000,
            hist(HistogramQuantity::EffectiveRank, 1.0, 2.0, 0.05),
        ),
        "diag-d20" => base(
            flow(Depth::Infinite, 1200.0, 1e-6),
            init(0.001, false),
            300,
            hist(HistogramQuantity::EffectiveRank, 1.0, 20.0, 0.25),
        ),
        "upper-T" => base(
            flow(Depth::Infinite, 1200.0, 1e-15),
            init(0.001, false),
            1000,
            hist(HistogramQuantity::EffectiveRank, 1.0, 2.0, 0.05),
        ),
        "cycle-3x3" => base(
            flow(Depth::Infinite, 2000.0, 1e-8),
            init(0.02, false),
            500,
            hist(HistogramQuantity::CycleDistance, 0.0, 5.0, 0.1),
        ),
        "rank1-manifold" => base(
            flow(Depth::Finite(20), 1200.0, 1e-15),
            init(0.001, true),
            1000,
            hist(HistogramQuantity::LeadingSigma, 1.5, 3.0, 0.1),
        ),
        _ => return Err(unknown(name)),
    })
}

/// Human-readable listing of every preset with its target and mask.
pub fn listing() -> String {
    let mut out = String::new();
    for info in &INFO {
        let cfg = default_config(info.name).expect("listed presets exist");
        let (phi, mask) = problem_rows(info.name, None).expect("listed presets exist");
        out.push_str(&format!("{}\n  {}\n", info.name, info.description));
        out.push_str(&format!(
            "  depth {}, sd {}, runs {}, dt {}, max_time {}, energy_tol {:e}\n",
            cfg.flow.depth, cfg.init.sd, cfg.n_runs, cfg.flow.dt, cfg.flow.max_time, cfg.flow.energy_tol
        ));
        let d = phi.len();
        let shown = if d > 4 { 4 } else { d };
        out.push_str("  phi / mask:\n");
        for i in 0..shown {
            let row: Vec<String> = (0..shown).map(|j| format!("{:>9.6}", phi[i][j])).collect();
            let mrow: Vec<&str> = (0..shown).map(|j| if mask[i][j] { "1" } else { "0" }).collect();
            let more = if d > shown { " ..." } else { "" };
            out.push_str(&format!("    [{}{more}]   [{}{more}]\n", row.join(" "), mrow.join(" ")));
        }
        if d > shown {
            out.push_str(&format!("    ... ({d}x{d})\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_match_definitions() {
        let (_, m) = problem_rows("upper-T", None).unwrap();
        assert_eq!(m, vec![vec![true, true], vec![false, true]]);
        let (phi, m) = problem_rows("cycle-3x3", None).unwrap();
        assert_eq!(
            m,
            vec![vec![true, false, true], vec![true, true, false], vec![false, true, true]]
        );
        assert_eq!(phi[0][0], -1.55795);
        assert_eq!(phi[2][2], 1.92653);
        let (phi, m) = problem_rows("diag-d20", None).unwrap();
        assert_eq!(phi.len(), 20);
        assert_eq!((phi[0][0], phi[19][19]), (0.5, 1.5));
        assert!(m[3][3] && !m[3][4]);
        assert_eq!(problem_rows("diag-d20", Some(5)).unwrap().0.len(), 5);
        assert!(problem_rows("diag-d2", Some(3)).is_err());
        assert!(problem_rows("nope", None).is_err());
    }

    #[test]
    fn listing_mentions_every_preset() {
        let text = listing();
        for name in NAMES {
            assert!(text.contains(name));
        }
    }
}
