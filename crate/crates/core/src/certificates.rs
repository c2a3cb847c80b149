//! Dual norm, level-set radii and the convergence-rate bounds.

use nalgebra::DMatrix;

use crate::blocks::BlockVector;
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, sorted_eigen};
use crate::objective::SeparableObjective;
use crate::probdesign::GTau;

/// `||x||^*_{G} = sqrt(sum_c x_c^T G^+ x_c)` for `x` on the coupling subspace.
pub fn dual_norm(gt: &GTau, x: &BlockVector) -> Result<f64> {
    if x.n_blocks() != gt.n() {
        return Err(Error::DimensionMismatch {
            expected: gt.n(),
            got: x.n_blocks(),
        });
    }
    let residual = x.coupling_residual();
    if !(residual <= 1e-8 * (1.0 + x.max_abs())) {
        return Err(Error::NotOnSubspace(residual));
    }
    let pinv = gt.pseudo_inverse();
    let mut total = 0.0;
    for c in 0..x.dim() {
        let v = nalgebra::DVector::from_vec(x.component(c));
        total += v.dot(&(&pinv * &v));
    }
    Ok(total.max(0.0).sqrt())
}

fn scan(f: &dyn Fn(f64) -> f64, start: f64, dir: f64, budget: f64, node: usize) -> Result<f64> {
    // f(start) <= budget; find the farthest t along dir with f <= budget
    let mut inside = 0.0_f64;
    let mut step = 1.0_f64.max(start.abs());
    let mut outside = None;
    for _ in 0..1100 {
        let t = inside + step;
        let v = f(start + dir * t);
        if !(start + dir * t).is_finite() {
            break;
        }
        if v > budget {
            outside = Some(t);
            break;
        }
        inside = t;
        step *= 2.0;
    }
    let mut outside = outside.ok_or(Error::UnboundedRadius(node))?;
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid <= inside || mid >= outside {
            break;
        }
        if f(start + dir * mid) <= budget {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(outside)
}

/// Per-node radii `R_i >= |x_i - x_i*|` over `{x : f(x) <= f0}`, using the
/// budget `f0 - sum_{j != i} inf f_j` for node `i` and bisection on both
/// sides of `x_i*`. Scalar blocks only.
pub fn level_set_radii(obj: &SeparableObjective, x_star: &BlockVector, f0: f64) -> Result<Vec<f64>> {
    if obj.block_dim() != 1 {
        return Err(Error::InvalidArgument("level_set_radii needs scalar blocks".into()));
    }
    let n = obj.n_nodes();
    if x_star.n_blocks() != n || x_star.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x_star.as_slice().len(),
        });
    }
    let inf: Vec<f64> = (0..n)
        .map(|i| {
            obj.node(i).infimum().ok_or_else(|| {
                Error::InvalidArgument(format!("infimum of node {i} is unknown"))
            })
        })
        .collect::<Result<_>>()?;
    let inf_total: f64 = inf.iter().sum();
    (0..n)
        .map(|i| {
            let f = |t: f64| obj.node(i).value(&[t]);
            let xi = x_star.block(i)[0];
            let budget = f0 - (inf_total - inf[i]);
            // keep x_i* itself inside despite rounding in the budget
            let budget = budget.max(f(xi));
            let right = scan(&f, xi, 1.0, budget, i)?;
            let left = scan(&f, xi, -1.0, budget, i)?;
            Ok(right.max(left))
        })
        .collect()
}

/// `max_{y in S, y != 0} y^T G^+ y / y^T D_L y`, the constant turning
/// `sum_i L_i R_i^2` into a bound on the squared dual-norm radius.
pub fn weighted_norm_constant(gt: &GTau, lipschitz: &[f64]) -> Result<f64> {
    let n = gt.n();
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lipschitz.len(),
        });
    }
    let b = complement_basis(n);
    let m = b.transpose() * gt.pseudo_inverse() * &b;
    let d = b.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lipschitz)) * &b;
    let chol = d
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("Lipschitz weights are not positive".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Lipschitz weights".into()))?;
    let reduced = &l_inv * m * l_inv.transpose();
    let (vals, _) = sorted_eigen(&reduced);
    Ok(*vals.last().expect("n >= 2"))
}

/// Bound on the squared dual-norm radius: `alpha * sum_i L_i R_i^2` with
/// `alpha` from [`weighted_norm_constant`].
pub fn radius_sq_weighted(gt: &GTau, lipschitz: &[f64], radii: &[f64]) -> Result<f64> {
    let alpha = weighted_norm_constant(gt, lipschitz)?;
    Ok(alpha * weighted_sum(lipschitz, radii))
}

fn weighted_sum(lipschitz: &[f64], radii: &[f64]) -> f64 {
    lipschitz.iter().zip(radii).map(|(l, r)| l * r * r).sum()
}

/// `2 R^2 / k`.
pub fn bound_thm1(radius: f64, k: usize) -> f64 {
    2.0 * radius * radius / k as f64
}

/// `(N - 1)/(tau - 1) * 2 sum_i L_i R_i^2 / k`.
pub fn bound_thm3(lipschitz: &[f64], radii: &[f64], n: usize, tau: usize, k: usize) -> f64 {
    (n - 1) as f64 / (tau - 1) as f64 * 2.0 * weighted_sum(lipschitz, radii) / k as f64
}

/// `2 sum_i R_i^2 / (lambda_2 k)`.
pub fn bound_estimate3(radii: &[f64], lambda2: f64, k: usize) -> f64 {
    2.0 * radii.iter().map(|r| r * r).sum::<f64>() / (lambda2 * k as f64)
}

/// `(1 - sigma_G)^k * gap0`.
pub fn bound_thm2(sigma_g: f64, gap0: f64, k: usize) -> f64 {
    (1.0 - sigma_g.clamp(0.0, 1.0)).powi(k.min(i32::MAX as usize) as i32) * gap0
}

/// A rate bound together with the constants it was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum RateCertificate {
    SmoothThm1 { radius_sq: f64 },
    StronglyConvexThm2 { sigma_g: f64, gap0: f64 },
    CompleteGraphThm3 { lipschitz: Vec<f64>, radii: Vec<f64>, n: usize, tau: usize },
    Lambda2Estimate3 { radii: Vec<f64>, lambda2: f64 },
}

impl RateCertificate {
    /// Bound on `E[f(x^k)] - f*`; infinite at `k = 0` except for the linear rate.
    pub fn bound(&self, k: usize) -> f64 {
        match self {
            RateCertificate::StronglyConvexThm2 { sigma_g, gap0 } => bound_thm2(*sigma_g, *gap0, k),
            _ if k == 0 => f64::INFINITY,
            RateCertificate::SmoothThm1 { radius_sq } => 2.0 * radius_sq / k as f64,
            RateCertificate::CompleteGraphThm3 {
                lipschitz,
                radii,
                n,
                tau,
            } => bound_thm3(lipschitz, radii, *n, *tau, k),
            RateCertificate::Lambda2Estimate3 { radii, lambda2 } => bound_estimate3(radii, *lambda2, k),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RateCertificate::SmoothThm1 { .. } => "smooth_thm1",
            RateCertificate::StronglyConvexThm2 { .. } => "strongly_convex_thm2",
            RateCertificate::CompleteGraphThm3 { .. } => "complete_graph_thm3",
            RateCertificate::Lambda2Estimate3 { .. } => "lambda2_estimate3",
        }
    }

    /// One-line `key=value` description for trace headers.
    pub fn describe(&self) -> String {
        match self {
            RateCertificate::SmoothThm1 { radius_sq } => {
                format!("{} radius_sq={radius_sq:e}", self.kind())
            }
            RateCertificate::StronglyConvexThm2 { sigma_g, gap0 } => {
                format!("{} sigma_g={sigma_g:e} gap0={gap0:e}", self.kind())
            }
            RateCertificate::CompleteGraphThm3 {
                lipschitz,
                radii,
                n,
                tau,
            } => format!(
                "{} n={n} tau={tau} sum_l_r2={:e}",
                self.kind(),
                weighted_sum(lipschitz, radii)
            ),
            RateCertificate::Lambda2Estimate3 { radii, lambda2 } => format!(
                "{} lambda2={lambda2:e} sum_r2={:e}",
                self.kind(),
                radii.iter().map(|r| r * r).sum::<f64>()
            ),
        }
    }
}

/// First `k` with `gap <= eps` in a `(k, gap)` trace.
pub fn first_hit(trace: &[(usize, f64)], eps: f64) -> Option<usize> {
    trace.iter().find(|(_, g)| *g <= eps).map(|(k, _)| *k)
}

/// `k_a(eps) / k_b(eps)` for two `(k, gap)` traces.
pub fn speedup_ratio(trace_a: &[(usize, f64)], trace_b: &[(usize, f64)], eps: f64) -> Result<f64> {
    let a = first_hit(trace_a, eps).ok_or(Error::NotReached(eps))?;
    let b = first_hit(trace_b, eps).ok_or(Error::NotReached(eps))?;
    if b == 0 {
        return Ok(if a == 0 { 1.0 } else { f64::INFINITY });
    }
    Ok(a as f64 / b as f64)
}
