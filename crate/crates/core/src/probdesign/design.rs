//! Probability design by projected subgradient ascent on the simplex.
//!
//! Both objectives are minimum eigenvalues of matrices affine in `p`, hence
//! concave; `v^T G_N v` at a minimizing eigenvector `v` is a supergradient.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::distribution::{dist_uniform, PathDistribution};
use super::spectral::{assemble_matrix, g_path, lambda2_pair, path_quadratic_form, sigma_g_pair};
use crate::error::{Error, Result};
use crate::graph::PathSet;
use crate::linalg::project_simplex;
use crate::par::map_range_auto;

/// Step-size schedule for the ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `scale * sqrt(2) / (sqrt(P) * max_N ||G_N||_2 * sqrt(t + 1))` for `P`
    /// paths: the simplex diameter over a bound on the supergradient norm.
    Diminishing { scale: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Diminishing { scale: 1.0 }
    }
}

/// Outcome of a design run.
#[derive(Debug, Clone)]
pub struct Design {
    pub distribution: PathDistribution,
    /// Objective value (lambda_2 or unclamped sigma_G) of the returned distribution.
    pub value: f64,
    /// Objective value at the uniform warm start.
    pub start_value: f64,
    pub iterations: usize,
}

/// Minimum relative improvement for replacing the incumbent.
const IMPROVEMENT_TOL: f64 = 1e-12;

fn max_path_norm(paths: &PathSet, lipschitz: &[f64]) -> f64 {
    paths
        .paths()
        .iter()
        .map(|p| {
            // G_N is PSD; its spectral norm is its largest eigenvalue
            let m = g_path(lipschitz, p);
            m.symmetric_eigenvalues().max()
        })
        .fold(0.0, f64::max)
}

fn ascend<F>(
    paths: &Arc<PathSet>,
    lipschitz: &[f64],
    iters: usize,
    rule: StepRule,
    objective: F,
) -> Result<Design>
where
    F: Fn(&DMatrix<f64>) -> Result<(f64, Vec<f64>)>,
{
    if lipschitz.len() != paths.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: paths.n_nodes(),
            got: lipschitz.len(),
        });
    }
    let start = dist_uniform(paths);
    let mut p = start.probabilities().expect("explicit").to_vec();
    let (start_value, mut v) = objective(&assemble_matrix(lipschitz, paths.paths(), &p))?;
    let mut best = (start_value, p.clone());
    let StepRule::Diminishing { scale } = rule;
    let c = scale * std::f64::consts::SQRT_2 / ((paths.len() as f64).sqrt() * max_path_norm(paths, lipschitz));
    for t in 0..iters {
        let grad = map_range_auto(paths.len(), |k| {
            path_quadratic_form(lipschitz, paths.path(k), &v)
        });
        let eta = c / ((t + 1) as f64).sqrt();
        let stepped: Vec<f64> = p.iter().zip(&grad).map(|(p, g)| p + eta * g).collect();
        p = project_simplex(&stepped);
        let (value, vec) = objective(&assemble_matrix(lipschitz, paths.paths(), &p))?;
        if value > best.0 + IMPROVEMENT_TOL * best.0.abs().max(1.0) {
            best = (value, p.clone());
        }
        v = vec;
    }
    Ok(Design {
        distribution: PathDistribution::from_probabilities(Arc::clone(paths), best.1)?,
        value: best.0,
        start_value,
        iterations: iters,
    })
}

fn check_cover(paths: &PathSet) -> Result<()> {
    let mut covered = vec![false; paths.n_nodes()];
    for p in paths.paths() {
        for &v in p {
            covered[v] = true;
        }
    }
    match covered.iter().position(|c| !c) {
        Some(node) => Err(Error::UncoveredNode {
            node,
            tau: paths.tau(),
        }),
        None => Ok(()),
    }
}

/// Maximizes `lambda_2(G_tau(p))` over the simplex, warm-started at uniform and
/// returning the best iterate seen.
pub fn design_max_lambda2(
    paths: &Arc<PathSet>,
    lipschitz: &[f64],
    iters: usize,
    rule: StepRule,
) -> Result<Design> {
    check_cover(paths)?;
    ascend(paths, lipschitz, iters, rule, |g| {
        let (val, v) = lambda2_pair(g);
        Ok((val, v.iter().copied().collect()))
    })
}

/// Maximizes the (unclamped) dual-norm strong-convexity modulus `sigma_G(p)`.
pub fn design_max_sigma(
    paths: &Arc<PathSet>,
    lipschitz: &[f64],
    sigma: &[f64],
    iters: usize,
    rule: StepRule,
) -> Result<Design> {
    check_cover(paths)?;
    ascend(paths, lipschitz, iters, rule, |g| {
        let (val, x) = sigma_g_pair(g, sigma)?;
        Ok((val, x.iter().copied().collect()))
    })
}
