//! File artifacts. Every writer is a pure function of its input, so
//! re-emitting the same result reproduces the same bytes.
//!
//! `<name>_runs.csv` columns: `seed,termination,steps,time,final_energy,
//! effective_rank,w_1_1,w_1_2,…,w_d_d` (final matrix, row-major).
//! Floats use the shortest representation that round-trips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::batch::BatchResult;
use crate::config::ArtifactKind;
use crate::error::{HarnessError, Result};
use crate::heatmap::Heatmap;

pub fn runs_csv(result: &BatchResult) -> String {
    let d = result.records.first().map_or(0, |r| r.final_state.dim());
    let mut out = String::from("seed,termination,steps,time,final_energy,effective_rank");
    for i in 1..=d {
        for j in 1..=d {
            write!(out, ",w_{i}_{j}").unwrap();
        }
    }
    out.push('\n');
    for r in &result.records {
        let seed = r.seed.map_or(String::new(), |s| s.to_string());
        write!(
            out,
            "{seed},{},{},{},{},{}",
            r.terminated.as_str(),
            r.steps,
            r.time,
            r.final_energy,
            r.effective_rank
        )
        .unwrap();
        let w = r.final_matrix();
        for i in 0..d {
            for j in 0..d {
                write!(out, ",{}", w[(i, j)]).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct HistogramDoc<'a> {
    name: &'a str,
    config_hash: &'a str,
    quantity: crate::config::HistogramQuantity,
    converged_runs: usize,
    not_converged_runs: usize,
    #[serde(flatten)]
    histogram: &'a crate::outcomes::Histogram,
}

pub fn histogram_json(result: &BatchResult) -> String {
    let converged = result.converged().count();
    let doc = HistogramDoc {
        name: &result.config.name,
        config_hash: &result.config_hash,
        quantity: result.config.histogram.quantity,
        converged_runs: converged,
        not_converged_runs: result.records.len() - converged,
        histogram: &result.histogram,
    };
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}

pub fn summary_json(result: &BatchResult) -> String {
    serde_json::to_string_pretty(&result.summary()).unwrap() + "\n"
}

pub fn heatmap_csv(map: &Heatmap) -> String {
    let mut out = String::from("w12,w21,log_density,status\n");
    for c in &map.cells {
        match c.log_density {
            Some(v) => writeln!(out, "{},{},{v},ok", c.w12, c.w21).unwrap(),
            None => writeln!(out, "{},{},,{}", c.w12, c.w21, c.status).unwrap(),
        }
    }
    out
}

pub fn artifact_path(dir: &Path, name: &str, kind: ArtifactKind) -> PathBuf {
    let suffix = match kind {
        ArtifactKind::RunsCsv => "runs.csv",
        ArtifactKind::Histogram => "histogram.json",
        ArtifactKind::Summary => "summary.json",
        ArtifactKind::Heatmap => "heatmap.csv",
    };
    dir.join(format!("{name}_{suffix}"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes the batch artifacts requested by the config (the summary is always
/// written). Heatmaps are produced by the `heatmap` command.
pub fn emit(result: &BatchResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let name = &result.config.name;
    let mut written = Vec::new();
    let mut kinds = Vec::new();
    for &kind in result.config.outputs.iter().chain([&ArtifactKind::Summary]) {
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    for kind in kinds {
        let text = match kind {
            ArtifactKind::RunsCsv => runs_csv(result),
            ArtifactKind::Histogram => histogram_json(result),
            ArtifactKind::Summary => summary_json(result),
            ArtifactKind::Heatmap => continue,
        };
        let path = artifact_path(dir, name, kind);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}
