//! The RCD_tau iteration: sample a path, move its blocks along the closed-form
//! feasible direction, keep `f` up to date from the touched nodes only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blocks::BlockVector;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::objective::SeparableObjective;
use crate::probdesign::PathDistribution;

/// Steps between full recomputations of the cached objective value.
pub const REFRESH_INTERVAL: usize = 10_000;

/// Relative tolerance on `||sum_i x0_i||_inf` for a start to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Writes the direction for one path into `out` (`tau x n`, row-major).
///
/// `lipschitz` and `grads` are restricted to the path. Each coordinate is
/// `d_i = (gbar - g_i) / L_i` with `gbar` the `1/L`-weighted mean gradient; the
/// last row is set to minus the sum of the others so the update stays on the
/// coupling subspace up to one rounding.
pub fn direction_from_gradients(lipschitz: &[f64], grads: &[f64], dim: usize, out: &mut [f64]) {
    let tau = lipschitz.len();
    debug_assert_eq!(grads.len(), tau * dim);
    debug_assert_eq!(out.len(), tau * dim);
    let inv_sum: f64 = lipschitz.iter().map(|l| 1.0 / l).sum();
    for c in 0..dim {
        let mut gbar = 0.0;
        for (a, l) in lipschitz.iter().enumerate() {
            gbar += grads[a * dim + c] / l;
        }
        gbar /= inv_sum;
        let mut acc = 0.0;
        for (a, l) in lipschitz.iter().enumerate().take(tau - 1) {
            let d = (gbar - grads[a * dim + c]) / l;
            out[a * dim + c] = d;
            acc += d;
        }
        out[(tau - 1) * dim + c] = -acc;
    }
}

/// Closed-form direction for `path` at `x`, one block per path vertex.
pub fn direction(obj: &SeparableObjective, x: &BlockVector, path: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n = obj.n_nodes();
    let dim = obj.block_dim();
    check_path(path, n)?;
    if x.n_blocks() != n || x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: n * dim,
            got: x.as_slice().len(),
        });
    }
    let lip: Vec<f64> = path.iter().map(|&i| obj.lipschitz()[i]).collect();
    let mut grads = vec![0.0; path.len() * dim];
    for (a, &i) in path.iter().enumerate() {
        obj.node(i).gradient(x.block(i), &mut grads[a * dim..(a + 1) * dim]);
    }
    let mut out = vec![0.0; grads.len()];
    direction_from_gradients(&lip, &grads, dim, &mut out);
    Ok(out.chunks(dim).map(|c| c.to_vec()).collect())
}

fn check_path(path: &[usize], n: usize) -> Result<()> {
    if path.len() < 2 {
        return Err(Error::InvalidTau {
            tau: path.len(),
            n,
        });
    }
    for (a, &i) in path.iter().enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if path[..a].contains(&i) {
            return Err(Error::InvalidArgument(format!("vertex {i} repeated in path")));
        }
    }
    Ok(())
}

/// One recorded point of the descent trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub k: usize,
    pub f: f64,
}

/// Target that ends a run before the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopTarget {
    /// `f(x^k) - f_ref <= eps`, checked every step.
    FGapBelow { f_ref: f64, eps: f64 },
    /// `max_{i,j} ||grad f_i - grad f_j||_inf <= eps`, checked at trace points.
    GradDisagreementBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub target: Option<StopTarget>,
}

impl StopRule {
    pub fn iterations(max_iters: usize) -> Self {
        StopRule {
            max_iters,
            target: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    FGapReached,
    GradDisagreementReached,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Steps between trace records; `None` means `max(1, N / tau)`.
    pub trace_stride: Option<usize>,
    /// Abort with [`Error::Diverged`] when a touched block exceeds this in max-norm.
    pub divergence_ceiling: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: BlockVector,
    pub f: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TracePoint>,
}

/// Iterate, cached values and RNG of one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    x: BlockVector,
    node_f: Vec<f64>,
    f: f64,
    // Neumaier compensation for the running sum of per-step changes
    f_comp: f64,
    k: usize,
    rng: ChaCha8Rng,
    path: Vec<usize>,
    lip: Vec<f64>,
    grads: Vec<f64>,
    dir: Vec<f64>,
    last_change: f64,
    last_decrease: f64,
}

impl SolverState {
    /// Starts at `x0`, which must satisfy the coupling constraint.
    pub fn new(obj: &SeparableObjective, x0: BlockVector, seed: u64) -> Result<Self> {
        let node_f = obj.node_values(&x0)?;
        let residual = x0.coupling_residual();
        if !(residual <= FEASIBILITY_TOL * (1.0 + x0.max_abs())) {
            return Err(Error::InfeasibleStart(residual));
        }
        let f = sum(&node_f);
        Ok(SolverState {
            x: x0,
            node_f,
            f,
            f_comp: 0.0,
            k: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            path: Vec::new(),
            lip: Vec::new(),
            grads: Vec::new(),
            dir: Vec::new(),
            last_change: 0.0,
            last_decrease: 0.0,
        })
    }

    pub fn x(&self) -> &BlockVector {
        &self.x
    }

    pub fn into_x(self) -> BlockVector {
        self.x
    }

    /// Cached `f(x^k)`.
    pub fn f_value(&self) -> f64 {
        self.f + self.f_comp
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Path used by the last step.
    pub fn last_path(&self) -> &[usize] {
        &self.path
    }

    /// `f(x^k) - f(x^{k-1})` summed from per-node changes of the last step.
    pub fn last_change(&self) -> f64 {
        self.last_change
    }

    /// Guaranteed decrease `0.5 * sum_i L_i ||d_i||^2` of the last step.
    pub fn last_decrease(&self) -> f64 {
        self.last_decrease
    }

    /// Recomputes `f` from the per-node cache.
    pub fn refresh(&mut self) {
        self.f = sum(&self.node_f);
        self.f_comp = 0.0;
    }

    /// Samples a path from `dist` and applies its update.
    pub fn step(&mut self, obj: &SeparableObjective, dist: &PathDistribution) {
        let mut path = std::mem::take(&mut self.path);
        dist.sample(&mut self.rng, &mut path);
        self.apply(obj, &path);
        self.path = path;
        self.k += 1;
        if self.k % REFRESH_INTERVAL == 0 {
            self.refresh();
        }
    }

    fn apply(&mut self, obj: &SeparableObjective, path: &[usize]) {
        let dim = obj.block_dim();
        let tau = path.len();
        self.lip.clear();
        self.lip.extend(path.iter().map(|&i| obj.lipschitz()[i]));
        self.grads.resize(tau * dim, 0.0);
        self.dir.resize(tau * dim, 0.0);
        for (a, &i) in path.iter().enumerate() {
            obj.node(i)
                .gradient(self.x.block(i), &mut self.grads[a * dim..(a + 1) * dim]);
        }
        direction_from_gradients(&self.lip, &self.grads, dim, &mut self.dir);
        let mut change = 0.0;
        let mut decrease = 0.0;
        for (a, &i) in path.iter().enumerate() {
            let d = &self.dir[a * dim..(a + 1) * dim];
            if d.iter().all(|&v| v == 0.0) {
                continue;
            }
            let f_i = obj.node(i);
            change += f_i.value_change(self.x.block(i), d);
            decrease += 0.5 * self.lip[a] * d.iter().map(|v| v * v).sum::<f64>();
            for (xc, dc) in self.x.block_mut(i).iter_mut().zip(d) {
                *xc += dc;
            }
            self.node_f[i] = f_i.value(self.x.block(i));
        }
        let t = self.f + change;
        if self.f.abs() >= change.abs() {
            self.f_comp += (self.f - t) + change;
        } else {
            self.f_comp += (change - t) + self.f;
        }
        self.f = t;
        self.last_change = change;
        self.last_decrease = decrease;
    }
}

/// Neumaier-compensated sum.
fn sum(v: &[f64]) -> f64 {
    let mut s = 0.0_f64;
    let mut c = 0.0_f64;
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Runs RCD_tau from `x0` until `stop`.
pub fn run(
    obj: &SeparableObjective,
    g: &Network,
    dist: &PathDistribution,
    x0: BlockVector,
    stop: &StopRule,
    seed: u64,
    opts: &RunOptions,
) -> Result<SolveReport> {
    run_observed(obj, g, dist, x0, stop, seed, opts, |_| {})
}

/// [`run`] with a callback invoked after every step.
#[allow(clippy::too_many_arguments)]
pub fn run_observed<F>(
    obj: &SeparableObjective,
    g: &Network,
    dist: &PathDistribution,
    x0: BlockVector,
    stop: &StopRule,
    seed: u64,
    opts: &RunOptions,
    mut observer: F,
) -> Result<SolveReport>
where
    F: FnMut(&SolverState),
{
    let n = obj.n_nodes();
    if g.n_nodes() != n || dist.n_nodes() != n || !dist.is_supported_on(g) {
        return Err(Error::ForeignDistribution);
    }
    let mut state = SolverState::new(obj, x0, seed)?;
    let stride = opts
        .trace_stride
        .unwrap_or_else(|| (n / dist.tau()).max(1))
        .max(1);
    let mut trace = vec![TracePoint {
        k: 0,
        f: state.f_value(),
    }];
    let mut reason = StopReason::MaxIters;
    if target_met(obj, &state, stop.target, true)? {
        reason = stop_reason(stop.target);
    } else {
        while state.k < stop.max_iters {
            state.step(obj, dist);
            observer(&state);
            if let Some(ceiling) = opts.divergence_ceiling {
                let worst = state
                    .path
                    .iter()
                    .flat_map(|&i| state.x.block(i))
                    .fold(0.0_f64, |m, v| m.max(v.abs()));
                if !(worst <= ceiling) {
                    return Err(Error::Diverged(worst));
                }
            }
            let at_trace = state.k % stride == 0;
            if at_trace {
                trace.push(TracePoint {
                    k: state.k,
                    f: state.f_value(),
                });
            }
            if target_met(obj, &state, stop.target, at_trace)? {
                reason = stop_reason(stop.target);
                break;
            }
        }
    }
    if trace.last().map(|t| t.k) != Some(state.k) {
        trace.push(TracePoint {
            k: state.k,
            f: state.f_value(),
        });
    }
    Ok(SolveReport {
        f: state.f_value(),
        iterations: state.k,
        stop_reason: reason,
        trace,
        x: state.into_x(),
    })
}

fn target_met(
    obj: &SeparableObjective,
    state: &SolverState,
    target: Option<StopTarget>,
    at_trace: bool,
) -> Result<bool> {
    Ok(match target {
        None => false,
        Some(StopTarget::FGapBelow { f_ref, eps }) => state.f_value() - f_ref <= eps,
        Some(StopTarget::GradDisagreementBelow(eps)) => {
            at_trace && obj.grad_disagreement(&state.x)? <= eps
        }
    })
}

fn stop_reason(target: Option<StopTarget>) -> StopReason {
    match target {
        None => StopReason::MaxIters,
        Some(StopTarget::FGapBelow { .. }) => StopReason::FGapReached,
        Some(StopTarget::GradDisagreementBelow(_)) => StopReason::GradDisagreementReached,
    }
}
