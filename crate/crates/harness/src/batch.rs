use std::collections::BTreeMap;

use dln_core::dynamics::{integrate, integrate_from_state, RunRecord};
use dln_core::linalg::{sample_wigner, svd, SvdState};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Resolved};
use crate::error::{HarnessError, Result};
use crate::outcomes::{histogram_of, median, Histogram};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Ordered by seed.
    pub records: Vec<RunRecord>,
    /// Converged records only.
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub name: String,
    pub config_hash: String,
    pub n_runs: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub terminations: BTreeMap<&'static str, usize>,
    pub median_effective_rank_converged: Option<f64>,
    pub histogram_total: u64,
}

impl BatchResult {
    pub fn converged(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.converged())
    }

    pub fn summary(&self) -> BatchSummary {
        let mut terminations = BTreeMap::new();
        for r in &self.records {
            *terminations.entry(r.terminated.as_str()).or_insert(0) += 1;
        }
        let converged = self.converged().count();
        let ranks: Vec<f64> = self.converged().map(|r| r.effective_rank).collect();
        BatchSummary {
            name: self.config.name.clone(),
            config_hash: self.config_hash.clone(),
            n_runs: self.records.len(),
            converged,
            not_converged: self.records.len() - converged,
            terminations,
            median_effective_rank_converged: median(&ranks),
            histogram_total: self.histogram.total(),
        }
    }

    /// SHA-256 over the emitted runs table and histogram.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(crate::emit::runs_csv(self).as_bytes());
        h.update(crate::emit::histogram_json(self).as_bytes());
        hex::encode(h.finalize())
    }
}

/// Drops every singular value but the first.
pub fn project_rank_one(state: &SvdState) -> Result<SvdState> {
    let mut sigma = DVector::zeros(state.dim());
    sigma[0] = state.sigma()[0];
    Ok(SvdState::from_parts(state.u().clone(), sigma, state.v().clone())?)
}

/// One integration from the Wigner draw with the given seed.
pub fn run_single(config: &ExperimentConfig, resolved: &Resolved, seed: u64) -> Result<RunRecord> {
    let w0 = sample_wigner(&resolved.wigner, seed);
    let mut record = if config.init.rank_one {
        let state = project_rank_one(&svd(&w0)?)?;
        integrate_from_state(&resolved.flow, &resolved.problem, state)?
    } else {
        integrate(&resolved.flow, &resolved.problem, &w0)?
    };
    record.seed = Some(seed);
    Ok(record)
}

/// Runs `n_runs` integrations with seeds `seed_base + i` on `jobs` threads.
pub fn run_batch(config: &ExperimentConfig, jobs: usize) -> Result<BatchResult> {
    let resolved = config.resolve()?;
    let seeds: Vec<u64> = (0..config.n_runs as u64)
        .map(|i| config.seed_base.checked_add(i))
        .collect::<Option<_>>()
        .ok_or_else(|| HarnessError::config("seed_base + n_runs overflows"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start {jobs} workers: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_single(config, &resolved, s))
            .collect::<Result<_>>()
    })?;
    let histogram = histogram_of(&config.histogram, &records, resolved.problem.phi());
    Ok(BatchResult {
        config: config.clone(),
        config_hash: config.hash(),
        records,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::default_config;

    fn small(name: &str, n: usize) -> ExperimentConfig {
        let mut cfg = default_config(name).unwrap();
        cfg.n_runs = n;
        cfg
    }

    #[test]
    fn deterministic_and_independent_of_jobs() {
        let cfg = small("diag-d2", 4);
        let a = run_batch(&cfg, 1).unwrap();
        let b = run_batch(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.records.len(), 4);
        assert!(a.records.iter().enumerate().all(|(i, r)| r.seed == Some(i as u64)));
    }

    #[test]
    fn seed_isolation() {
        let cfg = small("upper-T", 3);
        let batch = run_batch(&cfg, 1).unwrap();
        let resolved = cfg.resolve().unwrap();
        let single = run_single(&cfg, &resolved, 2).unwrap();
        assert_eq!(batch.records[2], single);
    }

    #[test]
    fn rank_one_runs_stay_rank_one() {
        let cfg = small("rank1-manifold", 2);
        let batch = run_batch(&cfg, 1).unwrap();
        for r in &batch.records {
            assert_eq!(r.final_state.sigma()[1], 0.0);
            assert_eq!(r.effective_rank, 1.0);
        }
    }

    #[test]
    fn summary_counts_add_up() {
        let batch = run_batch(&small("diag-d2", 3), 1).unwrap();
        let s = batch.summary();
        assert_eq!(s.converged + s.not_converged, 3);
        assert_eq!(s.terminations.values().sum::<usize>(), 3);
        assert_eq!(s.histogram_total as usize + batch.histogram.excluded as usize, s.converged);
    }
}
