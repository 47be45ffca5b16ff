//! Scalar summaries of run outcomes and fixed-width histograms.

use dln_core::analysis::CycleTarget;
use dln_core::dynamics::RunRecord;
use dln_core::MatrixD;
use serde::{Deserialize, Serialize};

use crate::config::{HistogramQuantity, HistogramSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Values for which the quantity is undefined.
    pub excluded: u64,
}

impl Histogram {
    /// Bins `[lo + k w, lo + (k+1) w)` covering `[lo, hi)`.
    pub fn new(lo: f64, hi: f64, width: f64) -> Self {
        let n = ((hi - lo) / width).round().max(1.0) as usize;
        Histogram {
            edges: (0..=n).map(|k| lo + k as f64 * width).collect(),
            counts: vec![0; n],
            underflow: 0,
            overflow: 0,
            excluded: 0,
        }
    }

    pub fn from_values(spec_lo: f64, spec_hi: f64, width: f64, values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut h = Histogram::new(spec_lo, spec_hi, width);
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn add(&mut self, value: Option<f64>) {
        let Some(x) = value.filter(|x| x.is_finite()) else {
            self.excluded += 1;
            return;
        };
        let lo = self.edges[0];
        let width = self.edges[1] - lo;
        if x < lo {
            self.underflow += 1;
            return;
        }
        let k = ((x - lo) / width).floor() as usize;
        if k >= self.counts.len() {
            self.overflow += 1;
        } else {
            self.counts[k] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Index of the fullest bin (first on ties), if any bin is nonempty.
    pub fn mode_bin(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        (max > 0).then(|| self.counts.iter().position(|&c| c == max).unwrap())
    }

    pub fn bin_range(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }
}

/// Median of the values (mean of the two middle ones for even counts).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Parameter `γ = √(w12 / w21)` of the closest point on the positive lobe of
/// `w12 w21 = a b`, parametrised as `(√(ab) γ, √(ab)/γ)`.
pub fn hyperbola_gamma(w12: f64, w21: f64) -> Option<f64> {
    (w12 > 0.0 && w21 > 0.0).then(|| (w12 / w21).sqrt())
}

/// Signed arc length of the lobe `(c γ, c/γ)` from the corner `γ = 1`.
pub fn hyperbola_arc_length(c: f64, gamma: f64) -> f64 {
    // Simpson's rule on the speed c √(1 + γ⁻⁴)
    let speed = |g: f64| (1.0 + g.powi(-4)).sqrt();
    let n = 512;
    let h = (gamma - 1.0) / n as f64;
    let mut acc = speed(1.0) + speed(gamma);
    for k in 1..n {
        acc += speed(1.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    c * acc * h / 3.0
}

/// Arc-length coordinate of a 2×2 outcome for a diagonal target `(a, b)`.
pub fn hyperbola_arc(w: &MatrixD, a: f64, b: f64) -> Option<f64> {
    let gamma = hyperbola_gamma(w[(0, 1)], w[(1, 0)])?;
    Some(hyperbola_arc_length((a * b).sqrt(), gamma))
}

pub fn cycle_distance(w: &MatrixD, target: &CycleTarget) -> f64 {
    let f = CycleTarget::free_coords(w);
    let m = target.distinguished_point();
    f.iter().zip(m).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Value of the configured histogram quantity for one record.
pub fn quantity(q: HistogramQuantity, record: &RunRecord, phi: &MatrixD) -> Option<f64> {
    match q {
        HistogramQuantity::EffectiveRank => Some(record.effective_rank),
        HistogramQuantity::LeadingSigma => Some(record.final_state.sigma()[0]),
        HistogramQuantity::HyperbolaArc => {
            let w = MatrixD::new(record.final_matrix()).ok()?;
            (w.dim() == 2).then(|| hyperbola_arc(&w, phi[(0, 0)], phi[(1, 1)]))?
        }
        HistogramQuantity::CycleDistance => {
            let w = MatrixD::new(record.final_matrix()).ok()?;
            if w.dim() != 3 {
                return None;
            }
            let t = CycleTarget::new(
                phi[(0, 0)],
                phi[(0, 2)],
                phi[(1, 0)],
                phi[(1, 1)],
                phi[(2, 1)],
                phi[(2, 2)],
            )
            .ok()?;
            Some(cycle_distance(&w, &t))
        }
    }
}

/// Histogram of the converged records only.
pub fn histogram_of(spec: &HistogramSpec, records: &[RunRecord], phi: &MatrixD) -> Histogram {
    Histogram::from_values(
        spec.lo,
        spec.hi,
        spec.width,
        records.iter().filter(|r| r.converged()).map(|r| quantity(spec.quantity, r, phi)),
    )
}
