use nalgebra::DMatrix;

use super::problem::CompletionProblem;
use crate::error::{DlnError, Result};
use crate::linalg::{check_square, orthogonality_defect, SvdState};

/// Layers `W_N, …, W_1` of a linear network, stored left to right so that
/// `layers()[0] = W_N` and the product reads `layers()[0] ⋯ layers()[N−1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStack {
    layers: Vec<DMatrix<f64>>,
}

impl WeightStack {
    pub fn new(layers: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = match layers.first() {
            Some(m) => m.nrows(),
            None => return Err(DlnError::invalid("a network needs at least one layer")),
        };
        for m in &layers {
            check_square(m, d, "layer")?;
            crate::linalg::check_finite(m)?;
        }
        Ok(WeightStack { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.layers[0].nrows()
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    /// `W_j` with the usual 1-based numbering from the input side.
    pub fn layer(&self, j: usize) -> &DMatrix<f64> {
        &self.layers[self.depth() - j]
    }

    /// End-to-end matrix `W_N ⋯ W_1`.
    pub fn product(&self) -> DMatrix<f64> {
        self.layers[1..].iter().fold(self.layers[0].clone(), |acc, m| acc * m)
    }

    /// Replaces `W_j ↦ Qᵀ W_j` and `W_{j+1} ↦ W_{j+1} Q` for orthogonal `Q`.
    /// The product and the balance conditions are unchanged.
    pub fn apply_gauge(&mut self, j: usize, q: &DMatrix<f64>) -> Result<()> {
        let n = self.depth();
        if j == 0 || j >= n {
            return Err(DlnError::invalid(format!("gauge index {j} outside 1..{n}")));
        }
        check_square(q, self.dim(), "gauge")?;
        if orthogonality_defect(q) > 1e-10 {
            return Err(DlnError::invalid("gauge matrix is not orthogonal"));
        }
        let lower = n - j;
        let upper = n - j - 1;
        self.layers[lower] = q.transpose() * &self.layers[lower];
        self.layers[upper] = &self.layers[upper] * q;
        Ok(())
    }
}

/// `‖W_{j+1}ᵀ W_{j+1} − W_j W_jᵀ‖_F` for `j = 1, …, N−1`.
pub fn balance_residuals(stack: &WeightStack) -> Vec<f64> {
    (1..stack.depth())
        .map(|j| {
            let upper = stack.layer(j + 1);
            let lower = stack.layer(j);
            (upper.transpose() * upper - lower * lower.transpose()).norm()
        })
        .collect()
}

/// `W_N = U Σ^{1/N} Vᵀ` and `W_j = V Σ^{1/N} Vᵀ` for `j < N`.
pub fn balanced_factorization(state: &SvdState, depth: usize) -> Result<WeightStack> {
    if depth == 0 {
        return Err(DlnError::invalid("depth must be at least 1"));
    }
    let root = DMatrix::from_diagonal(&state.sigma().map(|s| s.powf(1.0 / depth as f64)));
    let vt = state.v().transpose();
    let top = state.u() * &root * &vt;
    let inner = state.v() * &root * &vt;
    let mut layers = vec![top];
    layers.extend(std::iter::repeat(inner).take(depth - 1));
    WeightStack::new(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpstairsSample {
    pub t: f64,
    pub step: u64,
    pub end_to_end: DMatrix<f64>,
    pub energy: f64,
    pub max_balance_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpstairsTrajectory {
    pub samples: Vec<UpstairsSample>,
    pub final_stack: WeightStack,
}

/// Gradient flow of `E(W_N ⋯ W_1)` in the layers, integrated with RK4.
///
/// Each layer moves along `−(1/N) ∂E/∂W_j`, so that on balanced
/// initialisations the end-to-end matrix follows `Ẇ = −𝒜_{N,W}(∂_W E)` at the
/// same time scale as [`integrate`](super::integrate).
pub fn upstairs_flow(
    problem: &CompletionProblem,
    initial: &WeightStack,
    dt: f64,
    max_time: f64,
    sample_every: u64,
) -> Result<UpstairsTrajectory> {
    check_square(&initial.layers[0], problem.dim(), "layers")?;
    if !(dt > 0.0 && max_time >= 0.0 && dt.is_finite() && max_time.is_finite()) {
        return Err(DlnError::invalid(format!("bad time grid dt={dt}, max_time={max_time}")));
    }
    let total = (max_time / dt - 1e-9).ceil().max(0.0) as u64;
    let mut x = initial.layers.clone();
    let mut samples = Vec::new();
    let record = |x: &[DMatrix<f64>], step: u64| -> Result<UpstairsSample> {
        let stack = WeightStack::new(x.to_vec())?;
        let end_to_end = stack.product();
        Ok(UpstairsSample {
            t: step as f64 * dt,
            step,
            energy: problem.loss_unchecked(&end_to_end),
            max_balance_residual: balance_residuals(&stack).into_iter().fold(0.0, f64::max),
            end_to_end,
        })
    };
    if sample_every > 0 {
        samples.push(record(&x, 0)?);
    }
    for step in 1..=total {
        let k1 = layer_velocity(problem, &x);
        let k2 = layer_velocity(problem, &axpy(&x, 0.5 * dt, &k1));
        let k3 = layer_velocity(problem, &axpy(&x, 0.5 * dt, &k2));
        let k4 = layer_velocity(problem, &axpy(&x, dt, &k3));
        for (j, layer) in x.iter_mut().enumerate() {
            *layer += (&k1[j] + 2.0 * &k2[j] + 2.0 * &k3[j] + &k4[j]) * (dt / 6.0);
        }
        if sample_every > 0 && (step % sample_every == 0 || step == total) {
            samples.push(record(&x, step)?);
        }
    }
    Ok(UpstairsTrajectory {
        samples,
        final_stack: WeightStack::new(x)?,
    })
}

fn axpy(x: &[DMatrix<f64>], h: f64, k: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    x.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// `−(1/N) (W_N ⋯ W_{j+1})ᵀ ∂_W E (W_{j−1} ⋯ W_1)ᵀ` for every layer.
fn layer_velocity(problem: &CompletionProblem, layers: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = layers.len();
    let d = layers[0].nrows();
    let mut left = Vec::with_capacity(n);
    let mut acc = DMatrix::<f64>::identity(d, d);
    for m in layers {
        left.push(acc.clone());
        acc = &acc * m;
    }
    let grad = problem.euclid_grad_unchecked(&acc);
    let mut right = vec![DMatrix::<f64>::identity(d, d); n];
    for k in (0..n.saturating_sub(1)).rev() {
        right[k] = &layers[k + 1] * &right[k + 1];
    }
    let scale = -1.0 / n as f64;
    (0..n)
        .map(|k| left[k].transpose() * &grad * right[k].transpose() * scale)
        .collect()
}
