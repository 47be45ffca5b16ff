use nalgebra::{DMatrix, DVector};

use super::dense;
use super::problem::CompletionProblem;
use crate::analysis::effective_rank;
use crate::error::{DlnError, Result};
use crate::geometry::{lambda_pair_logs, Depth};
use crate::linalg::{check_square, svd, MatrixD, SvdState, DEFAULT_GAP_TOL};

/// Runs stop with [`Termination::RankCollapse`] once `σ_d` drops below this.
pub const RANK_COLLAPSE_FLOOR: f64 = 1e-300;

/// Steps are bisected (at most ten times) when an entry of `U̇` or
/// `V̇` times the step exceeds this, or when the step would reorder `σ`.
pub const MAX_ROTATION_PER_STEP: f64 = 0.02;
const MAX_HALVINGS: u32 = 10;

/// Parameters of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub depth: Depth,
    pub dt: f64,
    pub max_time: f64,
    pub energy_tol: f64,
    pub gap_tol: f64,
    /// Restrict the flow to matrices of this rank: trailing singular values
    /// are pinned at zero. Requires `N ≥ 2` or infinite depth.
    pub rank: Option<usize>,
}

impl FlowConfig {
    pub fn new(depth: Depth, dt: f64, max_time: f64, energy_tol: f64) -> Result<Self> {
        let config = FlowConfig {
            depth,
            dt,
            max_time,
            energy_tol,
            gap_tol: DEFAULT_GAP_TOL,
            rank: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Result<Self> {
        self.gap_tol = gap_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rank(mut self, rank: usize) -> Result<Self> {
        self.rank = Some(rank);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("dt", self.dt),
            ("max_time", self.max_time),
            ("energy_tol", self.energy_tol),
            ("gap_tol", self.gap_tol),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(DlnError::invalid(format!("{name} must be positive and finite, got {x}")));
            }
        }
        if let Depth::Finite(0) = self.depth {
            return Err(DlnError::invalid("depth must be at least 1"));
        }
        if let Some(r) = self.rank {
            if r == 0 {
                return Err(DlnError::invalid("pinned rank must be at least 1"));
            }
            if self.depth == Depth::Finite(1) {
                return Err(DlnError::Unsupported(
                    "at depth 1 the flow does not preserve rank; pinning is meaningless".into(),
                ));
            }
        }
        Ok(())
    }

    fn step_count(&self) -> u64 {
        (self.max_time / self.dt - 1e-9).ceil().max(0.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    HorizonReached,
    DegenerateSpectrum,
    RankCollapse,
    /// The state became non-finite.
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::HorizonReached => "horizon",
            Termination::DegenerateSpectrum => "degenerate_spectrum",
            Termination::RankCollapse => "rank_collapse",
            Termination::Diverged => "diverged",
        }
    }
}

/// Outcome of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Seed of the initial condition, when it came from a seeded draw.
    pub seed: Option<u64>,
    pub final_state: SvdState,
    pub final_energy: f64,
    pub effective_rank: f64,
    pub steps: u64,
    pub time: f64,
    pub terminated: Termination,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.terminated == Termination::Converged
    }

    pub fn final_matrix(&self) -> DMatrix<f64> {
        self.final_state.reconstruct()
    }
}

/// Time derivative of the singular coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDerivative {
    pub u_dot: DMatrix<f64>,
    pub sigma_dot: DVector<f64>,
    pub v_dot: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub step: u64,
    pub w: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub energy: f64,
}

/// Right-hand side of the SVD-coordinate flow with the default gap tolerance.
pub fn svd_flow_rhs(depth: Depth, state: &SvdState, problem: &CompletionProblem) -> Result<FlowDerivative> {
    svd_flow_rhs_with_gap_tol(depth, state, problem, DEFAULT_GAP_TOL)
}

/// With `P = Uᵀ ∂_W E V`, `L_il = λ_il / (σ_i² − σ_l²)` (zero diagonal) and
/// `𝔰(M) = M − Mᵀ`:
///
/// ```text
/// U̇ = U 𝔰((L Σ) ∘ P)      Σ̇ = −Σ^{2α} diag(P)      V̇ = V 𝔰((Σ L) ∘ P)
/// ```
pub fn svd_flow_rhs_with_gap_tol(
    depth: Depth,
    state: &SvdState,
    problem: &CompletionProblem,
    gap_tol: f64,
) -> Result<FlowDerivative> {
    let d = state.dim();
    check_square(problem.mask(), d, "problem")?;
    let mut ws = Workspace::new(depth, problem, gap_tol, None);
    let x = Coords::from_state(state);
    let mut out = Coords::zeros(d);
    ws.rhs(&x, &mut out)?;
    Ok(FlowDerivative {
        u_dot: DMatrix::from_column_slice(d, d, &out.u),
        sigma_dot: DVector::from_column_slice(&out.s),
        v_dot: DMatrix::from_column_slice(d, d, &out.v),
    })
}

/// Integrates from the matrix `w0`.
///
/// `w0` must have positive singular values whose squares are separated by
/// at least `config.gap_tol` (only the leading `rank` ones when the rank is
/// pinned; the rest are projected to zero).
pub fn integrate(config: &FlowConfig, problem: &CompletionProblem, w0: &MatrixD) -> Result<RunRecord> {
    check_square(w0.as_dmatrix(), problem.dim(), "initial condition")?;
    integrate_from_state(config, problem, svd(w0)?)
}

pub fn integrate_from_state(config: &FlowConfig, problem: &CompletionProblem, state: SvdState) -> Result<RunRecord> {
    integrate_observed(config, problem, state, 0, |_| {})
}

/// Like [`integrate_from_state`], calling `observer` at `t = 0`, every
/// `sample_every` steps and at the final state. `sample_every = 0` disables
/// sampling.
pub fn integrate_observed(
    config: &FlowConfig,
    problem: &CompletionProblem,
    state: SvdState,
    sample_every: u64,
    mut observer: impl FnMut(&TrajectorySample),
) -> Result<RunRecord> {
    config.validate()?;
    let d = state.dim();
    check_square(problem.mask(), d, "problem")?;
    let rank = config.rank.unwrap_or(d);
    if rank > d {
        return Err(DlnError::invalid(format!("pinned rank {rank} exceeds dimension {d}")));
    }

    let mut x = Coords::from_state(&state);
    x.s[rank..].fill(0.0);
    let sigma = &x.s;
    if !(sigma[rank - 1] > RANK_COLLAPSE_FLOOR) {
        return Err(DlnError::RankCollapse {
            index: rank,
            value: sigma[rank - 1],
        });
    }
    for i in 0..rank.saturating_sub(1) {
        let gap = sigma[i] * sigma[i] - sigma[i + 1] * sigma[i + 1];
        if gap < config.gap_tol {
            return Err(DlnError::DegenerateSpectrum {
                i: i + 1,
                j: i + 2,
                gap,
                tol: config.gap_tol,
            });
        }
    }

    let mut ws = Workspace::new(config.depth, problem, config.gap_tol, config.rank);
    let mut rk = Rk4::new(d);
    let mut energy = ws.energy(&x);
    let sample = |ws: &mut Workspace, x: &Coords, step: u64, energy: f64| TrajectorySample {
        t: step as f64 * config.dt,
        step,
        w: ws.end_to_end(x),
        sigma: x.s.clone(),
        energy,
    };
    if sample_every > 0 {
        observer(&sample(&mut ws, &x, 0, energy));
    }

    let total = config.step_count();
    let mut steps = 0;
    let mut terminated = if energy < config.energy_tol {
        Termination::Converged
    } else {
        Termination::HorizonReached
    };
    while terminated == Termination::HorizonReached && steps < total {
        match advance(&mut ws, &mut rk, &mut x, config.dt, MAX_HALVINGS) {
            Ok(()) => {}
            Err(DlnError::DegenerateSpectrum { .. }) => {
                terminated = Termination::DegenerateSpectrum;
                break;
            }
            Err(DlnError::RankCollapse { .. }) => {
                terminated = Termination::RankCollapse;
                break;
            }
            Err(_) => {
                terminated = Termination::Diverged;
                break;
            }
        }
        steps += 1;
        energy = ws.energy(&x);
        if !energy.is_finite() {
            terminated = Termination::Diverged;
        } else if energy < config.energy_tol {
            terminated = Termination::Converged;
        }
        if sample_every > 0 && steps % sample_every == 0 && terminated == Termination::HorizonReached {
            observer(&sample(&mut ws, &x, steps, energy));
        }
    }
    if sample_every > 0 {
        observer(&sample(&mut ws, &x, steps, energy));
    }

    let final_state = x.into_state();
    let effective_rank = effective_rank(final_state.sigma_slice()).unwrap_or(f64::NAN);
    Ok(RunRecord {
        seed: None,
        final_energy: energy,
        effective_rank,
        steps,
        time: steps as f64 * config.dt,
        terminated,
        final_state,
    })
}

/// One step of size `h`; on a degenerate spectrum the step is retried as two
/// half steps, recursively up to `halvings` times.
fn advance(ws: &mut Workspace, rk: &mut Rk4, x: &mut Coords, h: f64, halvings: u32) -> Result<()> {
    let split = match rk.step(ws, x, h) {
        Ok(()) => halvings > 0 && (rk.max_rotation() * h > MAX_ROTATION_PER_STEP || rk.reorders(ws.rank)),
        Err(DlnError::DegenerateSpectrum { .. } | DlnError::RankCollapse { .. }) if halvings > 0 => true,
        Err(e) => return Err(e),
    };
    if split {
        advance(ws, rk, x, h / 2.0, halvings - 1)?;
        advance(ws, rk, x, h / 2.0, halvings - 1)
    } else {
        std::mem::swap(x, &mut rk.next);
        ws.tidy(x)
    }
}

/// Column-major `U`, `σ`, `V` (or their derivatives).
#[derive(Debug, Clone)]
struct Coords {
    u: Vec<f64>,
    s: Vec<f64>,
    v: Vec<f64>,
}

impl Coords {
    fn zeros(d: usize) -> Self {
        Coords {
            u: vec![0.0; d * d],
            s: vec![0.0; d],
            v: vec![0.0; d * d],
        }
    }

    fn from_state(state: &SvdState) -> Self {
        Coords {
            u: state.u().as_slice().to_vec(),
            s: state.sigma_slice().to_vec(),
            v: state.v().as_slice().to_vec(),
        }
    }

    fn into_state(self) -> SvdState {
        let d = self.s.len();
        SvdState::from_parts_unchecked(
            DMatrix::from_vec(d, d, self.u),
            DVector::from_vec(self.s),
            DMatrix::from_vec(d, d, self.v),
        )
    }

    /// `self = base + h · k`
    fn set_axpy(&mut self, base: &Coords, h: f64, k: &Coords) {
        for (dst, (b, kk)) in [
            (&mut self.u, (&base.u, &k.u)),
            (&mut self.s, (&base.s, &k.s)),
            (&mut self.v, (&base.v, &k.v)),
        ] {
            for ((o, x), y) in dst.iter_mut().zip(b.iter()).zip(kk.iter()) {
                *o = x + h * y;
            }
        }
    }
}

struct Rk4 {
    k: [Coords; 4],
    stage: Coords,
    next: Coords,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        Rk4 {
            k: std::array::from_fn(|_| Coords::zeros(d)),
            stage: Coords::zeros(d),
            next: Coords::zeros(d),
        }
    }

    /// Classic RK4 from `x` into `self.next`.
    fn step(&mut self, ws: &mut Workspace, x: &Coords, h: f64) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        ws.rhs(x, k1)?;
        self.stage.set_axpy(x, 0.5 * h, k1);
        ws.rhs(&self.stage, k2)?;
        self.stage.set_axpy(x, 0.5 * h, k2);
        ws.rhs(&self.stage, k3)?;
        self.stage.set_axpy(x, h, k3);
        ws.rhs(&self.stage, k4)?;
        let c = h / 6.0;
        for (dst, src, a, b, cc, dd) in [
            (&mut self.next.u, &x.u, &k1.u, &k2.u, &k3.u, &k4.u),
            (&mut self.next.s, &x.s, &k1.s, &k2.s, &k3.s, &k4.s),
            (&mut self.next.v, &x.v, &k1.v, &k2.v, &k3.v, &k4.v),
        ] {
            for i in 0..dst.len() {
                dst[i] = src[i] + c * (a[i] + 2.0 * b[i] + 2.0 * cc[i] + dd[i]);
            }
        }
        Ok(())
    }

    /// Largest entry of `U̇`, `V̇` over the stages of the last step.
    fn max_rotation(&self) -> f64 {
        self.k
            .iter()
            .flat_map(|k| k.u.iter().chain(&k.v))
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Whether the last step moved active singular values out of order.
    fn reorders(&self, rank: usize) -> bool {
        self.next.s[..rank].windows(2).any(|w| w[0] < w[1])
    }
}

/// Problem data and scratch buffers for the right-hand side.
struct Workspace {
    d: usize,
    depth: Depth,
    gap_tol: f64,
    rank: usize,
    phi: Vec<f64>,
    mask: Vec<f64>,
    w: Vec<f64>,
    tmp: Vec<f64>,
    p: Vec<f64>,
    au: Vec<f64>,
    av: Vec<f64>,
    sq: Vec<f64>,
    log_sq: Vec<f64>,
}

impl Workspace {
    fn new(depth: Depth, problem: &CompletionProblem, gap_tol: f64, rank: Option<usize>) -> Self {
        let d = problem.dim();
        Workspace {
            d,
            depth,
            gap_tol,
            rank: rank.unwrap_or(d),
            phi: problem.phi().as_dmatrix().as_slice().to_vec(),
            mask: problem.mask().as_slice().to_vec(),
            w: vec![0.0; d * d],
            tmp: vec![0.0; d * d],
            p: vec![0.0; d * d],
            au: vec![0.0; d * d],
            av: vec![0.0; d * d],
            sq: vec![0.0; d],
            log_sq: vec![0.0; d],
        }
    }

    fn end_to_end(&mut self, x: &Coords) -> DMatrix<f64> {
        dense::mul_diag_tr(self.d, &x.u, &x.s, &x.v, &mut self.w);
        DMatrix::from_column_slice(self.d, self.d, &self.w)
    }

    fn energy(&mut self, x: &Coords) -> f64 {
        dense::mul_diag_tr(self.d, &x.u, &x.s, &x.v, &mut self.w);
        0.5 * self
            .w
            .iter()
            .zip(&self.phi)
            .zip(&self.mask)
            .map(|((w, p), b)| b * (w - p) * (w - p))
            .sum::<f64>()
    }

    fn rhs(&mut self, x: &Coords, out: &mut Coords) -> Result<()> {
        let d = self.d;
        let rank = self.rank;
        for i in 0..d {
            let s = x.s[i];
            if i < rank && !(s > 0.0) {
                return Err(DlnError::RankCollapse { index: i + 1, value: s });
            }
            self.sq[i] = s * s;
            self.log_sq[i] = self.sq[i].ln();
        }
        for i in 0..rank {
            for l in i + 1..d {
                let gap = self.sq[i] - self.sq[l];
                if !(gap.abs() >= self.gap_tol) {
                    return Err(DlnError::DegenerateSpectrum {
                        i: i + 1,
                        j: l + 1,
                        gap,
                        tol: self.gap_tol,
                    });
                }
            }
        }

        // P = Uᵀ (𝓑 ∘ (W − Φ)) V
        dense::mul_diag_tr(d, &x.u, &x.s, &x.v, &mut self.w);
        for ((w, p), b) in self.w.iter_mut().zip(&self.phi).zip(&self.mask) {
            *w = b * (*w - p);
        }
        dense::mul(d, &self.w, &x.v, &mut self.tmp);
        dense::tr_mul(d, &x.u, &self.tmp, &mut self.p);

        let alpha = self.depth.alpha();
        for i in 0..d {
            let lambda_ii = match self.depth {
                Depth::Finite(1) => 1.0,
                _ if self.sq[i] == 0.0 => 0.0,
                _ => (alpha * self.log_sq[i]).exp(),
            };
            out.s[i] = -lambda_ii * self.p[i + i * d];
            self.au[i + i * d] = 0.0;
            self.av[i + i * d] = 0.0;
            for l in i + 1..d {
                let (a, b) = (self.sq[i], self.sq[l]);
                let coupling = if i >= rank && l >= rank {
                    0.0
                } else {
                    lambda_pair_logs(self.depth, a, self.log_sq[i], b, self.log_sq[l]) / (a - b)
                };
                let (si, sl) = (x.s[i], x.s[l]);
                let (pil, pli) = (self.p[i + l * d], self.p[l + i * d]);
                // L_li = −L_il, so the transposed entries flip sign.
                let au = coupling * (sl * pil + si * pli);
                let av = coupling * (si * pil + sl * pli);
                self.au[i + l * d] = au;
                self.au[l + i * d] = -au;
                self.av[i + l * d] = av;
                self.av[l + i * d] = -av;
            }
        }
        dense::mul(d, &x.u, &self.au, &mut out.u);
        dense::mul(d, &x.v, &self.av, &mut out.v);
        Ok(())
    }

    /// Re-orthonormalises `U`, `V`, restores descending order of the active
    /// singular values and checks for collapse.
    fn tidy(&mut self, x: &mut Coords) -> Result<()> {
        let d = self.d;
        if x.s.iter().chain(&x.u).chain(&x.v).any(|v| !v.is_finite()) {
            return Err(DlnError::NonFinite { row: 0, col: 0 });
        }
        dense::orthonormalize(d, &mut x.u);
        dense::orthonormalize(d, &mut x.v);
        for i in 1..self.rank {
            let mut j = i;
            while j > 0 && x.s[j - 1] < x.s[j] {
                x.s.swap(j - 1, j);
                dense::swap_columns(d, &mut x.u, j - 1, j);
                dense::swap_columns(d, &mut x.v, j - 1, j);
                j -= 1;
            }
        }
        let last = x.s[self.rank - 1];
        if !(last >= RANK_COLLAPSE_FLOOR) {
            return Err(DlnError::RankCollapse {
                index: self.rank,
                value: last,
            });
        }
        Ok(())
    }
}
