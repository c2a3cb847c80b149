//! Brute-force references: the exact multiplier solve, the KKT direction,
//! exhaustive expected decrease and Dykstra projections.

use nalgebra::{DMatrix, DVector};

use crate::blocks::BlockVector;
use crate::error::{Error, Result};
use crate::feasibility::ConvexSet;
use crate::objective::{NodeFunction, SeparableObjective};
use crate::probdesign::PathDistribution;
use crate::solver::direction;

/// Largest number of paths [`expected_decrease_exhaustive`] will enumerate.
pub const MAX_ENUMERATION: usize = 100_000;

/// Optimal point of `min f(x)` subject to `sum_i x_i = 0` for scalar blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub multiplier: f64,
    pub x: BlockVector,
    pub f: f64,
}

fn scalar_grad(f: &dyn NodeFunction, x: f64) -> f64 {
    let mut g = [0.0];
    f.gradient(&[x], &mut g);
    g[0]
}

/// Solves `f'(x) = lambda` for one scalar term. Returns `+-inf` when `lambda`
/// lies outside the range of `f'`.
fn invert_gradient(f: &dyn NodeFunction, lambda: f64, start: f64) -> f64 {
    let resid = |x: f64| scalar_grad(f, x) - lambda;
    let r0 = resid(start);
    if r0 == 0.0 {
        return start;
    }
    // bracket: step away from start in the descent direction of |resid|
    let dir = if r0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = 1.0_f64.max(start.abs());
    let (mut lo, mut hi) = (start, start);
    let mut found = false;
    for _ in 0..1100 {
        let probe = start + dir * step;
        if !probe.is_finite() {
            break;
        }
        if resid(probe).signum() != r0.signum() {
            if dir > 0.0 {
                hi = probe;
            } else {
                lo = probe;
            }
            found = true;
            break;
        }
        if dir > 0.0 {
            lo = probe;
        } else {
            hi = probe;
        }
        step *= 2.0;
    }
    if !found {
        return dir * f64::INFINITY;
    }
    // safeguarded Newton on [lo, hi] with resid(lo) < 0 < resid(hi)
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = resid(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let newton = f.curvature(x).filter(|c| *c > 0.0).map(|c| x - r / c);
        x = match newton {
            Some(nx) if nx > lo && nx < hi => nx,
            _ => 0.5 * (lo + hi),
        };
    }
    x
}

/// Solves `grad f_i(x_i) = lambda` for all `i` with `sum_i x_i = 0`: outer
/// bisection on `lambda`, inner safeguarded Newton per node.
pub fn optimal_multiplier(obj: &SeparableObjective) -> Result<Optimum> {
    if obj.block_dim() != 1 {
        return Err(Error::InvalidArgument(
            "optimal_multiplier needs scalar blocks".into(),
        ));
    }
    let n = obj.n_nodes();
    let nodes: Vec<&dyn NodeFunction> = (0..n).map(|i| obj.node(i)).collect();
    // at lambda = min_i f_i'(0) every x_i(lambda) <= 0, at the max every x_i >= 0
    let g0: Vec<f64> = nodes.iter().map(|f| scalar_grad(*f, 0.0)).collect();
    let mut lo = g0.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = g0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * n as f64;
    let mut xs = vec![0.0; n];
    let solve = |lambda: f64, xs: &mut [f64]| -> f64 {
        for (x, f) in xs.iter_mut().zip(&nodes) {
            let start = if x.is_finite() { *x } else { 0.0 };
            *x = invert_gradient(*f, lambda, start);
        }
        xs.iter().sum()
    };
    let mut lambda = lo;
    let mut s = solve(lambda, &mut xs);
    if s.is_nan() {
        return Err(Error::NoBracket);
    }
    if s.abs() > tol && lo < hi {
        let s_lo = s;
        let s_hi = solve(hi, &mut xs);
        if s_lo.is_nan() || s_hi.is_nan() || s_lo > 0.0 || s_hi < 0.0 {
            return Err(Error::NoBracket);
        }
        lambda = hi;
        s = s_hi;
        while s.abs() > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            lambda = mid;
            s = solve(mid, &mut xs);
            if s.is_nan() {
                return Err(Error::NoBracket);
            }
            if s < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if !s.is_finite() {
        return Err(Error::NoBracket);
    }
    // remove the leftover residual along the Newton direction of the
    // constraint; otherwise lambda * sum(x) leaks into f*
    let w: Vec<f64> = xs
        .iter()
        .zip(&nodes)
        .map(|(x, f)| f.curvature(*x).filter(|c| *c > 0.0).map_or(1.0, |c| 1.0 / c))
        .collect();
    let w_sum: f64 = w.iter().sum();
    for (x, wi) in xs.iter_mut().zip(&w) {
        *x -= s * wi / w_sum;
    }
    let x = BlockVector::from_scalars(xs);
    let f = obj.eval(&x)?;
    Ok(Optimum {
        multiplier: lambda,
        x,
        f,
    })
}

/// Direction from the KKT system `[D_L 1; 1^T 0] [s; mu] = [-g; 0]`, one LU
/// solve per block coordinate. `grads` is `tau x n`.
pub fn qp_direction(lipschitz: &[f64], grads: &DMatrix<f64>) -> DMatrix<f64> {
    let tau = lipschitz.len();
    let mut kkt = DMatrix::zeros(tau + 1, tau + 1);
    for (i, l) in lipschitz.iter().enumerate() {
        kkt[(i, i)] = *l;
        kkt[(i, tau)] = 1.0;
        kkt[(tau, i)] = 1.0;
    }
    let lu = kkt.lu();
    let mut out = DMatrix::zeros(tau, grads.ncols());
    for c in 0..grads.ncols() {
        let mut rhs = DVector::zeros(tau + 1);
        for i in 0..tau {
            rhs[i] = -grads[(i, c)];
        }
        let sol = lu.solve(&rhs).expect("KKT matrix is nonsingular for positive L");
        for i in 0..tau {
            out[(i, c)] = sol[i];
        }
    }
    out
}

/// Exact expectation of one step over all paths of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedStep {
    /// `E[f(x^+)]`.
    pub value: f64,
    /// `f(x) - E[f(x^+)]`, summed from per-node changes.
    pub decrease: f64,
}

/// Enumerates every path of `dist`, applies its update to `x` and averages.
/// Implicit complete-graph distributions are enumerated as vertex subsets.
pub fn expected_decrease_exhaustive(
    obj: &SeparableObjective,
    x: &BlockVector,
    dist: &PathDistribution,
) -> Result<ExpectedStep> {
    let f = obj.eval(x)?;
    let support = support(dist)?;
    let mut decrease = 0.0;
    for (path, p) in support {
        if p == 0.0 {
            continue;
        }
        let d = direction(obj, x, &path)?;
        let change: f64 = path
            .iter()
            .zip(&d)
            .map(|(&i, di)| obj.node(i).value_change(x.block(i), di))
            .sum();
        decrease -= p * change;
    }
    Ok(ExpectedStep {
        value: f - decrease,
        decrease,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn support(dist: &PathDistribution) -> Result<Vec<(Vec<usize>, f64)>> {
    if let (Some(ps), Some(p)) = (dist.pathset(), dist.probabilities()) {
        if ps.len() > MAX_ENUMERATION {
            return Err(Error::EnumerationTooLarge(ps.len()));
        }
        return Ok(ps.paths().iter().cloned().zip(p.iter().copied()).collect());
    }
    let w = dist.node_weights().ok_or(Error::ForeignDistribution)?;
    let (n, tau) = (dist.n_nodes(), dist.tau());
    let count = binomial(n, tau);
    if count > MAX_ENUMERATION as f64 {
        return Err(Error::EnumerationTooLarge(count.min(usize::MAX as f64) as usize));
    }
    // P(S) = sum_{i in S} w_i / (C(N-1, tau-1) * sum_i w_i)
    let norm = binomial(n - 1, tau - 1) * w.iter().sum::<f64>();
    let mut out = Vec::with_capacity(count as usize);
    let mut subset: Vec<usize> = (0..tau).collect();
    loop {
        let p = subset.iter().map(|&i| w[i]).sum::<f64>() / norm;
        out.push((subset.clone(), p));
        // next combination in lexicographic order
        let mut i = tau;
        while i > 0 && subset[i - 1] == n - tau + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..tau {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Projection of `v0` onto the intersection of `sets` by Dykstra's cyclic
/// projections, stopped once a full cycle moves neither the iterate nor the
/// correction terms by more than `tol`.
pub fn alternating_projections(
    sets: &[ConvexSet],
    v0: &[f64],
    tol: f64,
    max_cycles: usize,
) -> Result<Vec<f64>> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument("no sets to intersect".into()));
    }
    let n = v0.len();
    if let Some(s) = sets.iter().find(|s| s.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.dim(),
        });
    }
    if sets.len() == 1 {
        return Ok(sets[0].project(v0));
    }
    let mut x = v0.to_vec();
    let mut incr = vec![vec![0.0; n]; sets.len()];
    for _ in 0..max_cycles {
        let mut moved = 0.0_f64;
        for (set, q) in sets.iter().zip(incr.iter_mut()) {
            let z: Vec<f64> = x.iter().zip(q.iter()).map(|(a, b)| a + b).collect();
            let next = set.project(&z);
            for k in 0..n {
                let new_q = z[k] - next[k];
                moved = moved.max((new_q - q[k]).abs()).max((next[k] - x[k]).abs());
                q[k] = new_q;
                x[k] = next[k];
            }
        }
        if moved <= tol {
            return Ok(x);
        }
    }
    Err(Error::IterationCap(max_cycles))
}
