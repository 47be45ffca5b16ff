//! JSON experiment configuration.
//!
//! One document per experiment. `problem` either names a preset or gives
//! `phi` and `mask` explicitly (explicit entries override the preset).
//! Depth is an integer or the string `"inf"`.

use std::path::Path;

use dln_core::dynamics::{CompletionProblem, FlowConfig};
use dln_core::linalg::{WignerSpec, DEFAULT_GAP_TOL};
use dln_core::Depth;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub flow: FlowSpec,
    pub init: InitSpec,
    pub n_runs: usize,
    pub seed_base: u64,
    #[serde(default)]
    pub outputs: Vec<ArtifactKind>,
    #[serde(default)]
    pub histogram: HistogramSpec,
    #[serde(default)]
    pub heatmap: HeatmapSpec,
    #[serde(default)]
    pub volume_mc: VolumeMcSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Dimension for presets that scale with `d` (only `diag-d20`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    /// Rows of 0/1 flags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    #[serde(with = "depth_serde")]
    pub depth: Depth,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub max_time: f64,
    pub energy_tol: f64,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub mu: f64,
    pub sd: f64,
    /// Keep only the leading singular value of each draw and integrate on
    /// the rank-one manifold.
    #[serde(default)]
    pub rank_one: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    RunsCsv,
    Histogram,
    Summary,
    Heatmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramQuantity {
    EffectiveRank,
    /// Largest singular value of the outcome.
    LeadingSigma,
    /// Signed arc length from the corner along the positive lobe of the
    /// rank-one hyperbola (2×2 diagonal problems).
    HyperbolaArc,
    /// Distance to the distinguished rank-two completion in `(w12, w31, w23)`
    /// (cyclic 3×3 problem).
    CycleDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub quantity: HistogramQuantity,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            quantity: HistogramQuantity::EffectiveRank,
            lo: 1.0,
            hi: 20.0,
            width: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityForm {
    /// With respect to Lebesgue measure `dW`.
    Dw,
    /// With respect to `dΣ dU dV`.
    SigmaUv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSpec {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
    pub density: DensityForm,
    /// Cells with `σ_2 ≤ singular_ratio · σ_1` are reported as singular.
    pub singular_ratio: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            lo: -4.0,
            hi: 4.0,
            resolution: 400,
            density: DensityForm::Dw,
            singular_ratio: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeMcSpec {
    /// Edge length `H` of the cube around each center.
    pub cube_width: f64,
    /// Samples with smallest singular value `≤ h` are rejected.
    pub sv_floor: f64,
    pub n_samples: usize,
    pub n_competitors: usize,
    /// Standard deviation of `w12`, `w31` for the random rank-two minimisers.
    pub competitor_sd: f64,
    pub seed: u64,
}

impl Default for VolumeMcSpec {
    fn default() -> Self {
        VolumeMcSpec {
            cube_width: 1e-3,
            sv_floor: 1e-5,
            n_samples: 100_000,
            n_competitors: 24,
            competitor_sd: 10.0,
            seed: 0,
        }
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_gap_tol() -> f64 {
    DEFAULT_GAP_TOL
}

/// A validated configuration with its problem and flow parameters built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: CompletionProblem,
    pub flow: FlowConfig,
    pub wigner: WignerSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::config(format!("invalid config JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialise")
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs always serialise");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(HarnessError::config(format!(
                "name {:?} must be nonempty and use only letters, digits, '-', '_' or '.'",
                self.name
            )));
        }
        if self.n_runs == 0 {
            return Err(HarnessError::config("n_runs must be at least 1"));
        }
        let problem = self.problem.resolve()?;
        let d = problem.dim();
        let mut flow = FlowConfig::new(self.flow.depth, self.flow.dt, self.flow.max_time, self.flow.energy_tol)
            .and_then(|f| f.with_gap_tol(self.flow.gap_tol))
            .map_err(|e| HarnessError::config(format!("flow: {e}")))?;
        if self.init.rank_one {
            flow = flow.with_rank(1).map_err(|e| HarnessError::config(format!("flow: {e}")))?;
        }
        let wigner = WignerSpec::new(self.init.mu, self.init.sd, d).map_err(|e| HarnessError::config(format!("init: {e}")))?;
        let h = &self.histogram;
        if !(h.width > 0.0 && h.hi > h.lo && h.lo.is_finite() && h.hi.is_finite()) {
            return Err(HarnessError::config("histogram needs lo < hi and width > 0"));
        }
        if (h.hi - h.lo) / h.width > 1e6 {
            return Err(HarnessError::config("histogram has more than 10^6 bins"));
        }
        let m = &self.heatmap;
        if !(m.hi > m.lo && m.resolution >= 1 && m.singular_ratio >= 0.0) {
            return Err(HarnessError::config("heatmap needs lo < hi and resolution >= 1"));
        }
        let v = &self.volume_mc;
        if !(v.cube_width > 0.0 && v.sv_floor > 0.0 && v.n_samples >= 1 && v.competitor_sd > 0.0) {
            return Err(HarnessError::config("volume_mc needs positive cube_width, sv_floor, competitor_sd and n_samples"));
        }
        Ok(Resolved { problem, flow, wigner })
    }
}

impl ProblemSpec {
    pub fn preset(name: &str) -> Self {
        ProblemSpec {
            preset: Some(name.to_string()),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<CompletionProblem> {
        let (mut phi, mut mask) = match &self.preset {
            Some(name) => {
                let (phi, mask) = presets::problem_rows(name, self.dim)?;
                (Some(phi), Some(mask))
            }
            None => {
                if self.dim.is_some() {
                    return Err(HarnessError::config("problem.dim only applies to presets"));
                }
                (None, None)
            }
        };
        if let Some(p) = &self.phi {
            phi = Some(p.clone());
        }
        if let Some(m) = &self.mask {
            if let Some(bad) = m.iter().flatten().find(|&&b| b > 1) {
                return Err(HarnessError::config(format!("mask entries must be 0 or 1, found {bad}")));
            }
            mask = Some(m.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect());
        }
        let (Some(phi), Some(mask)) = (phi, mask) else {
            return Err(HarnessError::config("problem needs a preset or both phi and mask"));
        };
        CompletionProblem::from_rows(&phi, &mask).map_err(|e| HarnessError::config(format!("problem: {e}")))
    }
}

mod depth_serde {
    use dln_core::Depth;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(depth: &Depth, s: S) -> Result<S::Ok, S::Error> {
        match depth {
            Depth::Finite(n) => s.serialize_u32(*n),
            Depth::Infinite => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Depth, D::Error> {
        struct DepthVisitor;

        impl Visitor<'_> for DepthVisitor {
            type Value = Depth;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Depth, E> {
                u32::try_from(v)
                    .ok()
                    .filter(|&n| n >= 1)
                    .map(Depth::Finite)
                    .ok_or_else(|| E::custom(format!("depth {v} out of range")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Depth, E> {
                u64::try_from(v)
                    .map_err(|_| E::custom(format!("depth {v} must be positive")))
                    .and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Depth, E> {
                v.parse().map_err(|e| E::custom(format!("{e}")))
            }
        }

        d.deserialize_any(DepthVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::default_config;

    #[test]
    fn presets_round_trip_through_json() {
        for name in presets::NAMES {
            let cfg = default_config(name).unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
            cfg.resolve().unwrap();
        }
    }

    #[test]
    fn depth_accepts_integer_and_inf() {
        let base = default_config("diag-d2").unwrap().to_json();
        let finite = base.replace("\"depth\": \"inf\"", "\"depth\": 5");
        assert_eq!(ExperimentConfig::from_json(&finite).unwrap().flow.depth, Depth::Finite(5));
        let zero = base.replace("\"depth\": \"inf\"", "\"depth\": 0");
        assert!(ExperimentConfig::from_json(&zero).is_err());
    }

    #[test]
    fn wrong_mask_dimension_is_a_config_error() {
        let mut cfg = default_config("diag-d2").unwrap();
        cfg.problem.mask = Some(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = default_config("upper-T").unwrap().to_json().replacen('{', "{\"bogus\": 1,", 1);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = default_config("diag-d2").unwrap();
        let mut b = a.clone();
        b.seed_base += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
