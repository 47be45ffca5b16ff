//! Oracle suites run by `dln verify`. Each suite compares a fast path against
//! an independent reference on seeded inputs and reports the worst error.

use dln_core::analysis::attraction_rates;
use dln_core::dynamics::{
    balanced_factorization, integrate_observed, upstairs_flow, CompletionProblem, FlowConfig, Termination,
};
use dln_core::geometry::{apply_metric_dual, eigenvalues, lambda_pair};
use dln_core::linalg::{random_orthogonal, rng_from_seed, svd, svd_jacobian_oracle, vandermonde, DlnRng, WignerSpec};
use dln_core::oracle::pushforward_explicit;
use dln_core::{Depth, MatrixD, SvdState};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Few seeds and short horizons.
    Quick,
    /// The sizes used by the acceptance suite.
    Full,
}

impl std::str::FromStr for Level {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(HarnessError::config(format!("unknown level {s:?}; use quick or full"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error in the suite's own units.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}/{} cases within {:e} (worst {:.3e}){}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.cases - self.failures,
            self.cases,
            self.tolerance,
            self.worst,
            if self.detail.is_empty() { String::new() } else { format!("; {}", self.detail) }
        )
    }
}

struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(tolerance: f64) -> Self {
        Tally { cases: 0, failures: 0, worst: 0.0, tolerance }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        if !(err <= self.tolerance) {
            self.failures += 1;
        }
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
    }

    fn fail(&mut self) {
        self.cases += 1;
        self.failures += 1;
        self.worst = f64::INFINITY;
    }

    fn report(self, suite: &'static str, detail: String) -> SuiteReport {
        SuiteReport {
            suite,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            tolerance: self.tolerance,
            detail,
        }
    }
}

/// Random state with Haar factors and well-separated singular values in
/// `[0.2, 3]`.
pub fn random_state(d: usize, rng: &mut DlnRng) -> SvdState {
    loop {
        let mut s: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        if s.windows(2).all(|w| w[0] - w[1] > 1e-3) {
            let u = random_orthogonal(d, rng);
            let v = random_orthogonal(d, rng);
            return SvdState::from_parts(u, DVector::from_vec(s), v).expect("orthogonal factors");
        }
    }
}

/// Standard normal target with each entry observed with probability ½
/// (at least one observed entry).
pub fn random_problem(d: usize, rng: &mut DlnRng) -> CompletionProblem {
    let phi = WignerSpec::new(0.0, 1.0, d).expect("valid spec").sample_with(rng);
    loop {
        let mask = DMatrix::from_fn(d, d, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        if mask.iter().any(|&m| m == 1.0) {
            return CompletionProblem::new(phi, mask).expect("square inputs");
        }
    }
}

/// Worst end-to-end discrepancy and worst balance residual of one case.
struct FlowCase {
    discrepancy: f64,
    balance: f64,
    terminated: Termination,
}

fn flow_case(n: u32, d: usize, seed: u64, horizon: f64, dt: f64) -> Result<FlowCase> {
    let mut rng = rng_from_seed(seed);
    let problem = random_problem(d, &mut rng);
    let mut w0 = WignerSpec::new(0.0, 1.0, d)?.sample_with(&mut rng).into_dmatrix();
    // fully observed problems start in the component of GL(d) containing Φ
    if problem.unobserved_count() == 0 && w0.determinant() * problem.phi().as_dmatrix().determinant() < 0.0 {
        w0.row_mut(0).neg_mut();
    }
    let state = svd(&MatrixD::new(w0)?)?;
    let stack = balanced_factorization(&state, n as usize)?;
    let every = (1.0 / dt).round() as u64;
    let up = upstairs_flow(&problem, &stack, dt, horizon, every)?;

    let config = FlowConfig::new(Depth::Finite(n), dt, horizon, 1e-300)?;
    let mut down = Vec::new();
    let record = integrate_observed(&config, &problem, state, every, |s| down.push((s.step, s.w.clone())))?;
    let mut discrepancy: f64 = 0.0;
    let mut matched = 0;
    for (step, w) in &down {
        if let Some(u) = up.samples.iter().find(|u| u.step == *step) {
            discrepancy = discrepancy.max((&u.end_to_end - w).norm());
            matched += 1;
        }
    }
    if matched == 0 {
        discrepancy = f64::INFINITY;
    }
    let balance = up.samples.iter().map(|s| s.max_balance_residual).fold(0.0, f64::max);
    Ok(FlowCase {
        discrepancy,
        balance,
        terminated: record.terminated,
    })
}

/// Layer flow from balanced starts against the singular-coordinate flow,
/// compared at every unit of time. Returns the equivalence and balancedness
/// reports.
pub fn flow_equivalence(level: Level) -> (SuiteReport, SuiteReport) {
    let (seeds, horizon) = match level {
        Level::Quick => (3, 5.0),
        Level::Full => (20, 50.0),
    };
    let dt = 0.005;
    let cases: Vec<(u32, usize, u64)> = [2u32, 3, 5]
        .iter()
        .flat_map(|&n| [2usize, 3].into_iter().flat_map(move |d| (0..seeds).map(move |s| (n, d, s))))
        .collect();
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(n, d, s)| flow_case(n, d, 1000 * u64::from(n) + 100 * d as u64 + s, horizon, dt))
        .collect();
    let mut eq = Tally::new(1e-6);
    let mut bal = Tally::new(1e-8);
    let mut early = 0;
    for r in results {
        match r {
            Ok(c) => {
                if !matches!(c.terminated, Termination::HorizonReached | Termination::Converged) {
                    early += 1;
                    eq.fail();
                } else {
                    eq.record(c.discrepancy);
                }
                bal.record(c.balance);
            }
            Err(_) => {
                eq.fail();
                bal.fail();
            }
        }
    }
    let detail = format!("N in {{2,3,5}}, d in {{2,3}}, t in [0, {horizon}], dt {dt}");
    let eq_detail = if early > 0 { format!("{detail}, {early} stopped early") } else { detail.clone() };
    (eq.report("flow-equivalence", eq_detail), bal.report("balancedness", detail))
}

/// `apply_metric_dual` against the explicit matrix-power sum, relative error.
pub fn metric_operator(level: Level) -> SuiteReport {
    let seeds = match level {
        Level::Quick => 10,
        Level::Full => 100,
    };
    let mut t = Tally::new(1e-9);
    for n in [2u32, 5, 10] {
        for d in [2usize, 3] {
            for s in 0..seeds {
                let mut rng = rng_from_seed(50_000 + 1000 * u64::from(n) + 100 * d as u64 + s);
                let state = random_state(d, &mut rng);
                let z = WignerSpec::new(0.0, 1.0, d).expect("valid spec").sample_with(&mut rng);
                let w = state.reconstruct();
                let want = pushforward_explicit(n, &w, z.as_dmatrix());
                let got = eigenvalues(Depth::Finite(n), state.sigma_slice())
                    .and_then(|table| apply_metric_dual(&table, &state, &z));
                match got {
                    Ok(g) => t.record((g.as_dmatrix() - &want).norm() / want.norm()),
                    Err(_) => t.fail(),
                }
            }
        }
    }
    t.report("metric-operator", "N in {2,5,10}, d in {2,3}".into())
}

/// With `a = σ_i²`, `b = σ_l²`: `λ^N = λ^∞ (1 − ln(ab) / (2N)) + o(1/N)`. With
/// `e(N) = |N(λ^N − λ^∞) + ½ ln(ab) λ^∞| / λ^∞`, each case records
/// `e(1000) − e(100) / 5`, which must not exceed `1e-10`.
pub fn lambda_depth_limit(level: Level) -> SuiteReport {
    let seeds = match level {
        Level::Quick => 10,
        Level::Full => 100,
    };
    let mut t = Tally::new(1e-10);
    let mut max_scaled: f64 = 0.0;
    for s in 0..seeds {
        let mut rng = rng_from_seed(60_000 + s);
        let a: f64 = rng.random_range(0.05..5.0);
        let b: f64 = rng.random_range(0.05..5.0);
        let inf = lambda_pair(Depth::Infinite, a, b);
        let first = -0.5 * (a * b).ln() * inf;
        let scaled = |n: u32| f64::from(n) * (lambda_pair(Depth::Finite(n), a, b) - inf);
        let e = |n: u32| (scaled(n) - first).abs() / inf;
        for n in [10, 100, 1000] {
            max_scaled = max_scaled.max(scaled(n).abs() / inf);
        }
        t.record(e(1000) - e(100) / 5.0);
    }
    t.report(
        "lambda-depth-limit",
        format!("N in {{10,100,1000}}, max N|λ^N − λ^∞|/λ^∞ = {max_scaled:.3}"),
    )
}

/// SVD Jacobian determinant against `van(Σ²)`, relative error.
pub fn jacobian(level: Level) -> SuiteReport {
    let seeds = match level {
        Level::Quick => 10,
        Level::Full => 100,
    };
    let mut t = Tally::new(1e-8);
    for d in [2usize, 3, 4] {
        for s in 0..seeds {
            let mut rng = rng_from_seed(70_000 + 100 * d as u64 + s);
            let state = random_state(d, &mut rng);
            let sq: Vec<f64> = state.sigma_slice().iter().map(|x| x * x).collect();
            let want = vandermonde(&sq);
            match svd_jacobian_oracle(&state) {
                Ok(got) => t.record((got.abs() - want).abs() / want),
                Err(_) => t.fail(),
            }
        }
    }
    t.report("jacobian", "d in {2,3,4}".into())
}

/// Ordering of the infinite-depth spectrum (`λ_jj ≤ λ_ij ≤ λ_ii` and
/// `λ_kl ≤ λ_ij` for `i < j ≤ k < l`) and the bound
/// `min(σ_i^{2α}, σ_l^{2α}) ≤ λ^N_il ≤ max(σ_i^{2α}, σ_l^{2α})`, `α = (N−1)/N`.
/// Errors are relative violations; zero when the inequalities hold.
pub fn spectrum_bounds(level: Level) -> SuiteReport {
    let seeds = match level {
        Level::Quick => 10,
        Level::Full => 100,
    };
    let slack = 1e-12;
    let mut t = Tally::new(slack);
    for d in 2usize..=6 {
        for s in 0..seeds {
            let mut rng = rng_from_seed(80_000 + 100 * d as u64 + s);
            let state = random_state(d, &mut rng);
            let sigma = state.sigma_slice();
            let Ok(inf) = eigenvalues(Depth::Infinite, sigma) else {
                t.fail();
                continue;
            };
            let l = |i, j| inf.get(i, j);
            let violation = |small: f64, big: f64| (small - big) / big.abs().max(1e-300);
            let mut worst: f64 = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    worst = worst.max(violation(l(j, j), l(i, j)));
                    worst = worst.max(violation(l(i, j), l(i, i)));
                    // singular values are descending, so pairs further down are smaller
                    for k in j..d {
                        for m in k + 1..d {
                            worst = worst.max(violation(l(k, m), l(i, j)));
                        }
                    }
                }
            }
            for depth in [Depth::Finite(2), Depth::Finite(5), Depth::Finite(50), Depth::Infinite] {
                let alpha = depth.alpha();
                let Ok(table) = eigenvalues(depth, sigma) else {
                    worst = f64::INFINITY;
                    continue;
                };
                for i in 0..d {
                    for j in 0..d {
                        let (a, b) = (sigma[i].powf(2.0 * alpha), sigma[j].powf(2.0 * alpha));
                        let x = table.get(i, j);
                        worst = worst.max(violation(a.min(b), x)).max(violation(x, a.max(b)));
                    }
                }
            }
            t.record(worst.max(0.0));
        }
    }
    t.report("spectrum-bounds", "ordering at N = inf, mean bound at N in {2,5,50,inf}, d in 2..=6".into())
}

/// Rate chain on `d = 2` diagonal masks and interlacing for `d ≤ 4` masks.
/// Errors are relative violations.
pub fn attraction_rate_bounds(level: Level) -> SuiteReport {
    let seeds = match level {
        Level::Quick => 10,
        Level::Full => 100,
    };
    let tol = 1e-10;
    let mut t = Tally::new(tol);
    let depths = [Depth::Finite(2), Depth::Finite(10), Depth::Infinite];
    for s in 0..seeds {
        let mut rng = rng_from_seed(90_000 + s);
        let state = random_state(2, &mut rng);
        let depth = depths[s as usize % depths.len()];
        let mask = DMatrix::identity(2, 2);
        match attraction_rates(depth, &state, &mask) {
            Ok(r) => match r.chain {
                Some(c) => {
                    let seq = [c.lambda_22, c.alpha_2, c.lambda_12, c.alpha_1, c.lambda_11];
                    let v = seq.windows(2).map(|w| (w[0] - w[1]) / w[1]).fold(0.0, f64::max);
                    t.record(v);
                }
                None => t.fail(),
            },
            Err(_) => t.fail(),
        }
    }
    for d in 2usize..=4 {
        for s in 0..seeds {
            let mut rng = rng_from_seed(95_000 + 100 * d as u64 + s);
            let state = random_state(d, &mut rng);
            let depth = depths[s as usize % depths.len()];
            let mask = loop {
                let m = DMatrix::from_fn(d, d, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
                if m.iter().any(|&x| x == 1.0) {
                    break m;
                }
            };
            match attraction_rates(depth, &state, &mask) {
                Ok(r) => {
                    let scale = r.lambda_max;
                    let v = r
                        .alphas
                        .iter()
                        .map(|&a| ((r.lambda_min - a).max(a - r.lambda_max)) / scale)
                        .fold(0.0, f64::max);
                    t.record(v);
                }
                Err(_) => t.fail(),
            }
        }
    }
    t.report("attraction-rates", "d = 2 chain, interlacing for d in 2..=4".into())
}

/// All suites, in a fixed order.
pub fn run_all(level: Level, jobs: usize) -> Result<Vec<SuiteReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| {
        let (eq, bal) = flow_equivalence(level);
        vec![
            eq,
            bal,
            metric_operator(level),
            lambda_depth_limit(level),
            jacobian(level),
            spectrum_bounds(level),
            attraction_rate_bounds(level),
        ]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for r in run_all(Level::Quick, 1).unwrap() {
            assert!(r.passed(), "{}", r.line());
        }
    }

    #[test]
    fn failures_are_reported() {
        let mut t = Tally::new(1e-3);
        t.record(1e-4);
        t.record(f64::NAN);
        let r = t.report("x", String::new());
        assert_eq!((r.cases, r.failures), (2, 1));
        assert!(!r.passed());
        assert!(r.line().starts_with("FAIL x: 1/2"));
    }

    #[test]
    fn level_parsing() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert_eq!("nope".parse::<Level>().unwrap_err().exit_code(), 1);
    }
}
