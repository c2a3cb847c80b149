use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Network, PathSet};

/// Probability distribution over the paths the method samples from.
///
/// Two representations are supported. `Explicit` stores one probability per
/// enumerated path. `Complete` describes a distribution over all `tau`-subsets
/// of a complete graph with `p(S)` proportional to `sum_{i in S} w_i`; it is
/// sampled without enumerating the (combinatorially many) subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDistribution {
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Explicit {
        paths: Arc<PathSet>,
        p: Vec<f64>,
        cdf: Vec<f64>,
    },
    Complete {
        n: usize,
        tau: usize,
        weights: Vec<f64>,
        cdf: Vec<f64>,
    },
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = p
        .iter()
        .map(|x| {
            acc += x;
            acc / total
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl PathDistribution {
    /// Explicit distribution; `p` must be nonnegative and sum to one within
    /// `1e-9` (it is renormalized exactly).
    pub fn from_probabilities(paths: Arc<PathSet>, p: Vec<f64>) -> Result<Self> {
        if p.len() != paths.len() {
            return Err(Error::DimensionMismatch {
                expected: paths.len(),
                got: p.len(),
            });
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::from_weights(paths, p))
    }

    fn from_weights(paths: Arc<PathSet>, w: Vec<f64>) -> Self {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let cdf = cumulative(&p);
        PathDistribution {
            repr: Repr::Explicit { paths, p, cdf },
        }
    }

    fn complete(n: usize, tau: usize, weights: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        if tau < 2 || tau > n {
            return Err(Error::InvalidTau { tau, n });
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("node weights must be positive".into()));
        }
        let cdf = cumulative(&weights);
        Ok(PathDistribution {
            repr: Repr::Complete {
                n,
                tau,
                weights,
                cdf,
            },
        })
    }

    /// Uniform over all `tau`-subsets of the complete graph on `n` nodes.
    pub fn complete_uniform(n: usize, tau: usize) -> Result<Self> {
        Self::complete(n, tau, vec![1.0; n])
    }

    /// `p(S)` proportional to `sum_{i in S} L_i^alpha` on the complete graph.
    pub fn complete_lipschitz_power(tau: usize, lipschitz: &[f64], alpha: f64) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        Self::complete(
            lipschitz.len(),
            tau,
            lipschitz.iter().map(|l| l.powf(alpha)).collect(),
        )
    }

    /// `p(S)` proportional to `sum_{i in S} 1/L_i` on the complete graph.
    pub fn complete_inverse_lipschitz(tau: usize, lipschitz: &[f64]) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        Self::complete(
            lipschitz.len(),
            tau,
            lipschitz.iter().map(|l| 1.0 / l).collect(),
        )
    }

    pub fn n_nodes(&self) -> usize {
        match &self.repr {
            Repr::Explicit { paths, .. } => paths.n_nodes(),
            Repr::Complete { n, .. } => *n,
        }
    }

    pub fn tau(&self) -> usize {
        match &self.repr {
            Repr::Explicit { paths, .. } => paths.tau(),
            Repr::Complete { tau, .. } => *tau,
        }
    }

    /// Per-path probabilities, for explicit distributions.
    pub fn probabilities(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Explicit { p, .. } => Some(p),
            Repr::Complete { .. } => None,
        }
    }

    pub fn pathset(&self) -> Option<&Arc<PathSet>> {
        match &self.repr {
            Repr::Explicit { paths, .. } => Some(paths),
            Repr::Complete { .. } => None,
        }
    }

    /// Node weights of an implicit complete-graph distribution.
    pub fn node_weights(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Complete { weights, .. } => Some(weights),
            Repr::Explicit { .. } => None,
        }
    }

    /// Whether every path this distribution can emit lies in `g`.
    pub fn is_supported_on(&self, g: &Network) -> bool {
        match &self.repr {
            Repr::Explicit { paths, .. } => paths.lies_in(g),
            Repr::Complete { n, .. } => g.n_nodes() == *n && g.is_complete(),
        }
    }

    /// Draws one path into `out` (cleared first).
    pub fn sample(&self, rng: &mut impl Rng, out: &mut Vec<usize>) {
        out.clear();
        match &self.repr {
            Repr::Explicit { paths, cdf, .. } => {
                out.extend_from_slice(paths.path(draw(cdf, rng)));
            }
            Repr::Complete { n, tau, cdf, .. } => {
                // anchor with probability w_i / sum w, then a uniform
                // (tau-1)-subset of the rest: P(S) is proportional to sum_{i in S} w_i
                let anchor = draw(cdf, rng);
                out.push(anchor);
                for j in index::sample(rng, n - 1, tau - 1) {
                    out.push(if j >= anchor { j + 1 } else { j });
                }
            }
        }
    }
}

fn check_lipschitz(lipschitz: &[f64]) -> Result<()> {
    if let Some(i) = lipschitz.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz constant of node {i} must be positive"
        )));
    }
    Ok(())
}

/// Uniform distribution over the paths.
pub fn dist_uniform(paths: &Arc<PathSet>) -> PathDistribution {
    PathDistribution::from_weights(Arc::clone(paths), vec![1.0; paths.len()])
}

/// `p_N` proportional to `sum_{i in N} L_i^alpha`; `alpha = 0` is uniform.
pub fn dist_lipschitz_power(
    paths: &Arc<PathSet>,
    lipschitz: &[f64],
    alpha: f64,
) -> Result<PathDistribution> {
    check_lipschitz(lipschitz)?;
    if lipschitz.len() != paths.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: paths.n_nodes(),
            got: lipschitz.len(),
        });
    }
    let w = paths
        .paths()
        .iter()
        .map(|p| p.iter().map(|&i| lipschitz[i].powf(alpha)).sum())
        .collect();
    Ok(PathDistribution::from_weights(Arc::clone(paths), w))
}

/// `p_N` proportional to `sum_{i in N} 1/L_i`.
pub fn dist_inverse_lipschitz(paths: &Arc<PathSet>, lipschitz: &[f64]) -> Result<PathDistribution> {
    check_lipschitz(lipschitz)?;
    if lipschitz.len() != paths.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: paths.n_nodes(),
            got: lipschitz.len(),
        });
    }
    let w = paths
        .paths()
        .iter()
        .map(|p| p.iter().map(|&i| 1.0 / lipschitz[i]).sum())
        .collect();
    Ok(PathDistribution::from_weights(Arc::clone(paths), w))
}
