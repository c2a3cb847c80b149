//! Projection of a point onto an intersection of convex sets, solved by
//! running RCD_tau on the dual and recovering primal points per node.
//!
//! Node `i` holds `g_i(u) = p_i ||u - v0||^2` restricted to `Q_i`; the dual
//! terms are the conjugates `f_i(x) = max_{u in Q_i} <x, u> - g_i(u)`.

use std::sync::Arc;

use crate::blocks::BlockVector;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::objective::{NodeFunction, SeparableObjective};
use crate::probdesign::PathDistribution;
use crate::solver::{run_observed, RunOptions, SolveReport, StopRule};

/// A closed convex set with a closed-form Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{u : <a, u> <= b}`.
    Halfspace { a: Vec<f64>, b: f64 },
}

impl ConvexSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument("box needs lo <= hi".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if a.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("halfspace normal must be nonzero".into()));
        }
        Ok(ConvexSet::Halfspace { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { a, .. } => a.len(),
        }
    }

    /// Euclidean projection of `z`.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.project_into(z, &mut out);
        out
    }

    fn project_into(&self, z: &[f64], out: &mut [f64]) {
        match self {
            ConvexSet::Box { lo, hi } => {
                for k in 0..z.len() {
                    out[k] = z[k].clamp(lo[k], hi[k]);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let dist = z
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                let scale = if dist > *radius { radius / dist } else { 1.0 };
                for k in 0..z.len() {
                    out[k] = center[k] + scale * (z[k] - center[k]);
                }
            }
            ConvexSet::Halfspace { a, b } => {
                let excess = dot(a, z) - b;
                let t = if excess > 0.0 { excess / dot(a, a) } else { 0.0 };
                for k in 0..z.len() {
                    out[k] = z[k] - t * a[k];
                }
            }
        }
    }

    /// Distance from `z` to the set.
    pub fn distance(&self, z: &[f64]) -> f64 {
        let p = self.project(z);
        p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Euclidean projection onto `set`.
pub fn project(set: &ConvexSet, z: &[f64]) -> Vec<f64> {
    set.project(z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Conjugate of `p ||u - v0||^2 + indicator(Q)`.
#[derive(Debug, Clone)]
struct ConjugateNode {
    set: ConvexSet,
    v0: Vec<f64>,
    weight: f64,
}

impl ConjugateNode {
    fn maximizer(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self
            .v0
            .iter()
            .zip(x)
            .map(|(v, x)| v + x / (2.0 * self.weight))
            .collect();
        self.set.project(&z)
    }

    fn value_at(&self, x: &[f64], u: &[f64]) -> f64 {
        dot(x, u) - self.weight * dist_sq(u, &self.v0)
    }
}

impl NodeFunction for ConjugateNode {
    fn dim(&self) -> usize {
        self.v0.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let u = self.maximizer(x);
        self.value_at(x, &u)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let z: Vec<f64> = self
            .v0
            .iter()
            .zip(x)
            .map(|(v, x)| v + x / (2.0 * self.weight))
            .collect();
        self.set.project_into(&z, out);
    }
}

/// Projection of `v0` onto `Q_1 ∩ ... ∩ Q_N` with node weights `p`.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    sets: Vec<ConvexSet>,
    v0: Vec<f64>,
    weights: Vec<f64>,
    loose_lipschitz: bool,
}

impl FeasibilityProblem {
    /// Weights must be positive and sum to one.
    pub fn new(sets: Vec<ConvexSet>, v0: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if sets.len() < 2 {
            return Err(Error::InvalidSize(sets.len()));
        }
        if weights.len() != sets.len() {
            return Err(Error::DimensionMismatch {
                expected: sets.len(),
                got: weights.len(),
            });
        }
        if let Some(s) = sets.iter().find(|s| s.dim() != v0.len()) {
            return Err(Error::DimensionMismatch {
                expected: v0.len(),
                got: s.dim(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(FeasibilityProblem {
            sets,
            v0,
            weights,
            loose_lipschitz: false,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(sets: Vec<ConvexSet>, v0: Vec<f64>) -> Result<Self> {
        let n = sets.len();
        Self::new(sets, v0, vec![1.0 / n.max(1) as f64; n])
    }

    /// Use `L_i = 1/p_i`, `sigma_i = p_i` instead of the tight `1/(2 p_i)`, `2 p_i`.
    pub fn with_loose_lipschitz(mut self, loose: bool) -> Self {
        self.loose_lipschitz = loose;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.sets.len()
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lipschitz constants of the conjugate gradients.
    pub fn lipschitz(&self) -> Vec<f64> {
        let c = if self.loose_lipschitz { 1.0 } else { 0.5 };
        self.weights.iter().map(|p| c / p).collect()
    }

    /// Strong-convexity moduli of the primal terms.
    pub fn sigma(&self) -> Vec<f64> {
        let c = if self.loose_lipschitz { 1.0 } else { 2.0 };
        self.weights.iter().map(|p| c * p).collect()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn node(&self, i: usize) -> ConjugateNode {
        ConjugateNode {
            set: self.sets[i].clone(),
            v0: self.v0.clone(),
            weight: self.weights[i],
        }
    }

    /// `(f_i(x_i), grad f_i(x_i))`; the gradient is the primal maximizer `u_i`.
    pub fn conjugate_value_grad(&self, i: usize, x_i: &[f64]) -> Result<(f64, Vec<f64>)> {
        if i >= self.n_nodes() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n_nodes(),
            });
        }
        if x_i.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x_i.len(),
            });
        }
        let node = self.node(i);
        let u = node.maximizer(x_i);
        Ok((node.value_at(x_i, &u), u))
    }

    /// The dual objective `sum_i f_i(x_i)`.
    pub fn dual_objective(&self) -> Result<SeparableObjective> {
        let nodes: Vec<Arc<dyn NodeFunction>> = (0..self.n_nodes())
            .map(|i| Arc::new(self.node(i)) as Arc<dyn NodeFunction>)
            .collect();
        SeparableObjective::new(nodes, self.lipschitz(), None)
    }

    /// Primal points `u_i(x_i)` for a dual iterate.
    pub fn recover(&self, x: &BlockVector) -> BlockVector {
        let mut u = BlockVector::zeros(self.n_nodes(), self.dim());
        for i in 0..self.n_nodes() {
            let node = self.node(i);
            node.gradient(x.block(i), u.block_mut(i));
        }
        u
    }

    /// `g(u) = sum_i p_i ||u_i - v0||^2`.
    pub fn primal_value(&self, u: &BlockVector) -> f64 {
        (0..self.n_nodes())
            .map(|i| self.weights[i] * dist_sq(u.block(i), &self.v0))
            .sum()
    }

    /// `g* = ||v* - v0||^2` for the projection `v*`.
    pub fn optimal_value(&self, v_star: &[f64]) -> f64 {
        dist_sq(v_star, &self.v0)
    }

    /// `sum_i sigma_i ||u_i - v*||^2`.
    pub fn infeasibility(&self, u: &BlockVector, v_star: &[f64]) -> f64 {
        self.sigma()
            .iter()
            .enumerate()
            .map(|(i, s)| s * dist_sq(u.block(i), v_star))
            .sum()
    }

    /// `|g(u) - g*|`.
    pub fn suboptimality(&self, u: &BlockVector, v_star: &[f64]) -> f64 {
        (self.primal_value(u) - self.optimal_value(v_star)).abs()
    }

    /// `sum_i sigma_i ||u_i - ubar||^2` with `ubar` the sigma-weighted mean;
    /// needs no knowledge of `v*`.
    pub fn spread(&self, u: &BlockVector) -> f64 {
        let sigma = self.sigma();
        let total: f64 = sigma.iter().sum();
        let mut mean = vec![0.0; self.dim()];
        for (i, s) in sigma.iter().enumerate() {
            for (m, v) in mean.iter_mut().zip(u.block(i)) {
                *m += s * v / total;
            }
        }
        sigma
            .iter()
            .enumerate()
            .map(|(i, s)| s * dist_sq(u.block(i), &mean))
            .sum()
    }

    /// Upper bound on `R^2(0)` in the `G_tau` dual norm from a ball
    /// `B(w, rho)` contained in every set: the dual level set of `x = 0`
    /// satisfies `sum_i ||x_i|| <= B / rho` with
    /// `B = f(0) + (||w - v0|| + rho)^2`, so `R^2 <= (2 B / rho)^2 / lambda_2`.
    pub fn radius_sq_bound(&self, inner_center: &[f64], inner_radius: f64, lambda2: f64) -> Result<f64> {
        if inner_center.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: inner_center.len(),
            });
        }
        if !(inner_radius > 0.0) || !(lambda2 > 0.0) {
            return Err(Error::InvalidArgument(
                "inner radius and lambda_2 must be positive".into(),
            ));
        }
        for s in &self.sets {
            let reach = match s {
                ConvexSet::Ball { center, radius } => dist_sq(center, inner_center).sqrt() + inner_radius - radius,
                ConvexSet::Box { lo, hi } => lo
                    .iter()
                    .zip(hi)
                    .zip(inner_center)
                    .map(|((l, h), w)| (l - (w - inner_radius)).max((w + inner_radius) - h))
                    .fold(f64::NEG_INFINITY, f64::max),
                ConvexSet::Halfspace { a, b } => dot(a, inner_center) + inner_radius * dot(a, a).sqrt() - b,
            };
            if reach > 1e-12 * (1.0 + inner_radius) {
                return Err(Error::InvalidArgument(
                    "inner ball is not contained in every set".into(),
                ));
            }
        }
        let f0: f64 = (0..self.n_nodes())
            .map(|i| self.conjugate_value_grad(i, &vec![0.0; self.dim()]).map(|(v, _)| v))
            .sum::<Result<f64>>()?;
        let slack = dist_sq(inner_center, &self.v0).sqrt() + inner_radius;
        let b = f0 + slack * slack;
        let spread = 2.0 * b / inner_radius;
        Ok(spread * spread / lambda2)
    }

    /// `(k -> 4 R^2 / k, k -> 4 R^2 lambda_N / (sigma_min sqrt(k)))`.
    pub fn primal_error_bounds(&self, radius_sq: f64, lambda_max: f64) -> PrimalErrorBounds {
        PrimalErrorBounds {
            radius_sq,
            lambda_max,
            sigma_min: self.sigma_min(),
        }
    }
}

/// The two primal recovery rates as functions of the iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalErrorBounds {
    pub radius_sq: f64,
    pub lambda_max: f64,
    pub sigma_min: f64,
}

impl PrimalErrorBounds {
    /// Bound on `E ||u^k - v*||^2_{D_sigma}`.
    pub fn infeasibility(&self, k: usize) -> f64 {
        4.0 * self.radius_sq / k as f64
    }

    /// Bound on `E |g(u^k) - g*|`.
    pub fn suboptimality(&self, k: usize) -> f64 {
        4.0 * self.radius_sq * self.lambda_max / (self.sigma_min * (k as f64).sqrt())
    }
}

/// Primal points and diagnostics at the end of a projection run.
#[derive(Debug, Clone)]
pub struct PrimalRecovery {
    pub u: BlockVector,
    /// `sum_i sigma_i ||u_i - ubar||^2`.
    pub spread: f64,
    /// `g(u)`.
    pub primal_value: f64,
    /// `f(x)` of the dual iterate.
    pub dual_value: f64,
    /// `f(x) + g(u)`; tends to `f* + g* = 0`.
    pub duality_residual: f64,
}

/// Options of a projection run.
#[derive(Debug, Clone)]
pub struct ProjectionOptions {
    pub iters: usize,
    pub run: RunOptions,
}

/// Runs RCD_tau on the dual from `x = 0`, updating the primal points of the
/// touched nodes after every step. `on_trace(k, u)` is called at `k = 0` and at
/// every trace point.
pub fn solve_projection_observed<F>(
    prob: &FeasibilityProblem,
    g: &Network,
    dist: &PathDistribution,
    opts: &ProjectionOptions,
    seed: u64,
    mut on_trace: F,
) -> Result<(PrimalRecovery, SolveReport)>
where
    F: FnMut(usize, &BlockVector),
{
    let obj = prob.dual_objective()?;
    let x0 = BlockVector::zeros(prob.n_nodes(), prob.dim());
    let mut u = prob.recover(&x0);
    on_trace(0, &u);
    let stride = opts
        .run
        .trace_stride
        .unwrap_or_else(|| (prob.n_nodes() / dist.tau()).max(1))
        .max(1);
    let report = run_observed(
        &obj,
        g,
        dist,
        x0,
        &StopRule::iterations(opts.iters),
        seed,
        &opts.run,
        |state| {
            for &i in state.last_path() {
                obj.node(i).gradient(state.x().block(i), u.block_mut(i));
            }
            if state.k() % stride == 0 {
                on_trace(state.k(), &u);
            }
        },
    )?;
    let primal_value = prob.primal_value(&u);
    let recovery = PrimalRecovery {
        spread: prob.spread(&u),
        primal_value,
        dual_value: report.f,
        duality_residual: report.f + primal_value,
        u,
    };
    Ok((recovery, report))
}

/// [`solve_projection_observed`] without a trace callback.
pub fn solve_projection(
    prob: &FeasibilityProblem,
    g: &Network,
    dist: &PathDistribution,
    opts: &ProjectionOptions,
    seed: u64,
) -> Result<(PrimalRecovery, SolveReport)> {
    solve_projection_observed(prob, g, dist, opts, seed, |_, _| {})
}
