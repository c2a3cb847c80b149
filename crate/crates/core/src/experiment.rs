//! Multi-seed runs and their aggregation.

use crate::blocks::BlockVector;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::objective::SeparableObjective;
use crate::par::{map_range, Execution};
use crate::probdesign::PathDistribution;
use crate::solver::{run, RunOptions, SolveReport, StopRule};

/// Runs one solve per seed, in parallel when `exec` asks for it. Reports come
/// back in seed order regardless of scheduling.
#[allow(clippy::too_many_arguments)]
pub fn run_seeds(
    obj: &SeparableObjective,
    g: &Network,
    dist: &PathDistribution,
    x0: &BlockVector,
    stop: &StopRule,
    opts: &RunOptions,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<SolveReport>> {
    map_range(exec, seeds.len(), |s| {
        run(obj, g, dist, x0.clone(), stop, seeds[s], opts)
    })
    .into_iter()
    .collect()
}

/// Mean, min and max of the gap at one trace index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStats {
    pub k: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-`k` statistics of `f - f_ref` across runs with identical trace grids.
pub fn aggregate_gaps(reports: &[SolveReport], f_ref: f64) -> Result<Vec<GapStats>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to aggregate".into()))?;
    let len = first.trace.len();
    for r in reports {
        if r.trace.len() != len || r.trace.iter().zip(&first.trace).any(|(a, b)| a.k != b.k) {
            return Err(Error::InvalidArgument("runs have different trace grids".into()));
        }
    }
    Ok((0..len)
        .map(|t| {
            let gaps = reports.iter().map(|r| r.trace[t].f - f_ref);
            let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for g in gaps {
                sum += g;
                lo = lo.min(g);
                hi = hi.max(g);
            }
            GapStats {
                k: first.trace[t].k,
                mean: sum / reports.len() as f64,
                min: lo,
                max: hi,
            }
        })
        .collect())
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(
            "linear fit needs two or more paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}
