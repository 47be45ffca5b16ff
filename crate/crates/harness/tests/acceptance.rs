//! Acceptance criteria 1–11. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported like the others but do
//! not fail the run; any other FAIL, or a known failure that passes, does.

use std::time::Instant;

use dln_core::analysis::{hyperbola_asymptotics, hyperbola_matrix, hyperbola_normal, CycleTarget};
use dln_core::linalg::svd;
use dln_core::{Depth, MatrixD};
use dln_harness::config::{ExperimentConfig, HistogramQuantity, HistogramSpec};
use dln_harness::outcomes::{cycle_distance, hyperbola_arc, median, Histogram};
use dln_harness::presets::{default_config, DIAG_D2, UPPER_T};
use dln_harness::verify::{self, Level, SuiteReport};
use dln_harness::volume::volume_study;
use dln_harness::{run_batch, BatchResult};

const KNOWN_FAILURES: &[u32] = &[5];

struct Outcome {
    passed: bool,
    detail: String,
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn batch(cfg: &ExperimentConfig) -> BatchResult {
    run_batch(cfg, jobs()).expect("batch runs")
}

fn from_reports(reports: &[SuiteReport]) -> Outcome {
    Outcome {
        passed: reports.iter().all(SuiteReport::passed),
        detail: reports.iter().map(SuiteReport::line).collect::<Vec<_>>().join("; "),
    }
}

fn converged_fraction(r: &BatchResult) -> f64 {
    r.converged().count() as f64 / r.records.len() as f64
}

fn c1_c2() -> (Outcome, Outcome) {
    let (equivalence, balance) = verify::flow_equivalence(Level::Full);
    (from_reports(&[equivalence]), from_reports(&[balance]))
}

fn c3() -> Outcome {
    from_reports(&[verify::metric_operator(Level::Full), verify::lambda_depth_limit(Level::Full)])
}

fn c4() -> Outcome {
    from_reports(&[verify::jacobian(Level::Full)])
}

fn c5() -> Outcome {
    let cfg = default_config("upper-T").unwrap();
    let r = batch(&cfg);
    let want = UPPER_T[0][0] * UPPER_T[1][1] / UPPER_T[0][1];
    let errors: Vec<f64> = r.converged().map(|rec| (rec.final_matrix()[(1, 0)] - want).abs()).collect();
    let within = errors.iter().filter(|&&e| e <= 1e-4).count();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let frac = converged_fraction(&r);
    Outcome {
        passed: !errors.is_empty() && within == errors.len() && frac >= 0.99,
        detail: format!(
            "{within}/{} converged runs with |w21 - Phi11 Phi22/Phi12| <= 1e-4 (worst {worst:.3e}); converged {:.1}% of {}",
            errors.len(),
            100.0 * frac,
            r.records.len()
        ),
    }
}

fn c6() -> Outcome {
    let (a, b) = (DIAG_D2[0], DIAG_D2[1]);
    let mut passed = true;
    let mut parts = Vec::new();
    for depth in [Depth::Finite(5), Depth::Infinite] {
        let mut cfg = default_config("diag-d2").unwrap();
        cfg.flow.depth = depth;
        cfg.n_runs = 500;
        let r = batch(&cfg);
        let off_plane = r
            .converged()
            .map(|rec| {
                let w = rec.final_matrix();
                ((w[(0, 0)] - a).powi(2) + (w[(1, 1)] - b).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        let n_conv = r.converged().count();
        let mut ok = n_conv > 0 && off_plane <= 1e-4;
        let mut part = format!("N={depth}: {n_conv}/500 converged, max distance to minimiser plane {off_plane:.2e}");
        if depth == Depth::Infinite {
            let low = r.converged().filter(|rec| (1.0..=1.2).contains(&rec.effective_rank)).count();
            let mass = low as f64 / n_conv.max(1) as f64;
            // arc length from the corner, bins of width 0.25 centred on it
            let arcs = r.converged().map(|rec| hyperbola_arc(&MatrixD::new(rec.final_matrix()).unwrap(), a, b));
            let hist = Histogram::from_values(-3.125, 3.125, 0.25, arcs);
            let mode = hist.mode_bin().map(|k| hist.bin_range(k));
            let corner = mode.is_some_and(|(lo, hi)| lo <= 0.0 && 0.0 < hi);
            ok &= mass >= 0.9 && corner;
            part += &format!(
                ", effective-rank mass in [1, 1.2] {:.1}%, lobe arc-length mode bin {:?} (contains the corner: {corner})",
                100.0 * mass,
                mode
            );
        }
        passed &= ok;
        parts.push(part);
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn c7() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for d in [5usize, 20] {
        let mut medians = Vec::new();
        let mut modes = Vec::new();
        for depth in [Depth::Finite(3), Depth::Finite(10), Depth::Infinite] {
            let mut cfg = default_config("diag-d20").unwrap();
            cfg.problem.dim = Some(d);
            cfg.flow.depth = depth;
            cfg.n_runs = 100;
            cfg.histogram = HistogramSpec {
                quantity: HistogramQuantity::EffectiveRank,
                lo: 1.0,
                hi: d as f64,
                width: 0.25,
            };
            let r = batch(&cfg);
            let ranks: Vec<f64> = r.converged().map(|rec| rec.effective_rank).collect();
            medians.push(median(&ranks).unwrap_or(f64::NAN));
            modes.push(r.histogram.mode_bin().map(|k| r.histogram.bin_range(k)));
        }
        let decreasing = medians[1] < medians[0];
        let close = (medians[1] - medians[2]).abs() <= 0.2;
        let mode_ok = modes[1..].iter().all(|m| *m == Some((1.0, 1.25)));
        passed &= decreasing && close && mode_ok;
        parts.push(format!(
            "d={d}: median effective rank N=3 {:.4}, N=10 {:.4}, N=inf {:.4}; mode bins N=10 {:?}, N=inf {:?}",
            medians[0], medians[1], medians[2], modes[1], modes[2]
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn c8() -> Outcome {
    let cfg = default_config("cycle-3x3").unwrap();
    let study = volume_study(&cfg, jobs()).expect("volume study runs");
    let margin_ok = study.competitors.len() == 24 && study.margin >= 10f64.ln();

    let r = batch(&cfg);
    let target = CycleTarget::REFERENCE;
    let n_conv = r.converged().count();
    let near = r
        .converged()
        .filter(|rec| cycle_distance(&MatrixD::new(rec.final_matrix()).unwrap(), &target) <= 0.5)
        .count();
    let frac = near as f64 / n_conv.max(1) as f64;
    Outcome {
        passed: margin_ok && n_conv > 0 && frac >= 0.5,
        detail: format!(
            "log-mean-density margin of M over 24 competitors {:.3} (need >= ln 10 = {:.3}); \
             {near}/{n_conv} converged runs within 0.5 of M ({:.1}%)",
            study.margin,
            10f64.ln(),
            100.0 * frac
        ),
    }
}

fn c9() -> Outcome {
    let cfg = default_config("rank1-manifold").unwrap();
    let r = batch(&cfg);
    let product = DIAG_D2[0] * DIAG_D2[1];
    let worst = r
        .converged()
        .map(|rec| {
            let w = rec.final_matrix();
            (w[(0, 1)] * w[(1, 0)] - product).abs()
        })
        .fold(0.0, f64::max);
    let mode = r.histogram.mode_bin().map(|k| r.histogram.bin_range(k));
    let sigma_min = 2.03424;
    let mode_ok = mode.is_some_and(|(lo, hi)| lo >= 2.0 && hi <= 2.2 + 1e-12 && lo <= sigma_min && sigma_min < hi);
    let n_conv = r.converged().count();
    Outcome {
        passed: n_conv > 0 && worst <= 1e-4 && mode_ok,
        detail: format!(
            "{n_conv}/{} converged; max |w12 w21 - Phi1 Phi2| {worst:.2e}; sigma mode bin {mode:?}",
            r.records.len()
        ),
    }
}

fn c10() -> Outcome {
    from_reports(&[verify::attraction_rate_bounds(Level::Full)])
}

fn c11() -> Outcome {
    let eta = 1e-6;
    let mut worst = 0.0f64;
    for gamma in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let w = hyperbola_matrix(gamma).unwrap().into_dmatrix();
        let n = hyperbola_normal(gamma).unwrap().into_dmatrix();
        let exact = svd(&MatrixD::new(w + n * eta).unwrap()).unwrap();
        let approx = hyperbola_asymptotics(gamma, eta).unwrap();
        worst = worst
            .max((exact.sigma()[0] - approx.sigma1).abs())
            .max((exact.sigma()[1] - approx.sigma2).abs());
    }
    let ratios: Vec<f64> = (0..=50)
        .map(|k| {
            let eta = 10f64.powf(-8.0 + 5.0 * k as f64 / 50.0);
            let p = hyperbola_asymptotics(1.0, eta).unwrap();
            p.log_density.exp() * eta / eta.ln().abs()
        })
        .collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let bounded = lo > 0.1 && hi < 10.0;
    Outcome {
        passed: worst <= 1e-9 && bounded,
        detail: format!(
            "max singular value error at eta=1e-6 {worst:.2e}; density * eta / |log eta| in [{lo:.4}, {hi:.4}] over eta in [1e-8, 1e-3]"
        ),
    }
}

fn main() {
    let mut unexpected = Vec::new();
    let mut report = |id: u32, started: Instant, o: Outcome| {
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.passed, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id}: {} [{:.0} s]", o.detail, started.elapsed().as_secs_f64());
        if o.passed == known {
            unexpected.push(id);
        }
    };

    let t = Instant::now();
    let (one, two) = c1_c2();
    report(1, t, one);
    report(2, t, two);
    let criteria: [(u32, fn() -> Outcome); 9] =
        [(3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9), (10, c10), (11, c11)];
    for (id, f) in criteria {
        let t = Instant::now();
        report(id, t, f());
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance results for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
