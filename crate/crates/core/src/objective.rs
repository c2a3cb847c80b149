//! Separable objectives `f(x) = sum_i f_i(x_i)`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::BlockVector;
use crate::error::{Error, Result};

/// One term `f_i` of a separable objective, acting on a block of dimension `dim()`.
pub trait NodeFunction: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// `f(x + d) - f(x)`. Implementations should override this when the
    /// difference can be formed without cancellation.
    fn value_change(&self, x: &[f64], d: &[f64]) -> f64 {
        let moved: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
        self.value(&moved) - self.value(x)
    }

    /// Second derivative for scalar terms, when known in closed form.
    fn curvature(&self, _x: f64) -> Option<f64> {
        None
    }

    /// `inf_t f(t)` when known (it need not be attained).
    fn infimum(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = sum_i f_i(x_i)` with per-node Lipschitz constants of the gradients and
/// optional strong-convexity moduli.
#[derive(Debug, Clone)]
pub struct SeparableObjective {
    block_dim: usize,
    nodes: Vec<Arc<dyn NodeFunction>>,
    lipschitz: Vec<f64>,
    strong_convexity: Option<Vec<f64>>,
}

impl SeparableObjective {
    pub fn new(
        nodes: Vec<Arc<dyn NodeFunction>>,
        lipschitz: Vec<f64>,
        strong_convexity: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let block_dim = nodes[0].dim();
        if let Some(bad) = nodes.iter().find(|f| f.dim() != block_dim) {
            return Err(Error::DimensionMismatch {
                expected: block_dim,
                got: bad.dim(),
            });
        }
        if lipschitz.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lipschitz.len(),
            });
        }
        if let Some(i) = lipschitz.iter().position(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant of node {i} must be positive, got {}",
                lipschitz[i]
            )));
        }
        if let Some(s) = &strong_convexity {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            for (i, (&si, &li)) in s.iter().zip(&lipschitz).enumerate() {
                if !(si >= 0.0 && si <= li * (1.0 + 1e-12)) {
                    return Err(Error::InvalidArgument(format!(
                        "strong convexity {si} of node {i} must lie in [0, L_i = {li}]"
                    )));
                }
            }
        }
        Ok(SeparableObjective {
            block_dim,
            nodes,
            lipschitz,
            strong_convexity,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn strong_convexity(&self) -> Option<&[f64]> {
        self.strong_convexity.as_deref()
    }

    pub fn node(&self, i: usize) -> &dyn NodeFunction {
        self.nodes[i].as_ref()
    }

    fn check_shape(&self, x: &BlockVector) -> Result<()> {
        if x.dim() != self.block_dim {
            return Err(Error::DimensionMismatch {
                expected: self.block_dim,
                got: x.dim(),
            });
        }
        if x.n_blocks() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: x.n_blocks(),
            });
        }
        Ok(())
    }

    /// `sum_i f_i(x_i)`.
    pub fn eval(&self, x: &BlockVector) -> Result<f64> {
        self.check_shape(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &BlockVector) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, f)| f.value(x.block(i)))
            .sum()
    }

    /// `f_i(x_i)` for every node.
    pub fn node_values(&self, x: &BlockVector) -> Result<Vec<f64>> {
        self.check_shape(x)?;
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, f)| f.value(x.block(i)))
            .collect())
    }

    /// `grad f_i(x_i)`.
    pub fn grad_node(&self, i: usize, x_i: &[f64]) -> Result<Vec<f64>> {
        if i >= self.n_nodes() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n_nodes(),
            });
        }
        if x_i.len() != self.block_dim {
            return Err(Error::DimensionMismatch {
                expected: self.block_dim,
                got: x_i.len(),
            });
        }
        let mut g = vec![0.0; self.block_dim];
        self.nodes[i].gradient(x_i, &mut g);
        Ok(g)
    }

    /// Full gradient, block by block.
    pub fn gradient(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check_shape(x)?;
        let mut g = BlockVector::zeros(self.n_nodes(), self.block_dim);
        for (i, f) in self.nodes.iter().enumerate() {
            f.gradient(x.block(i), g.block_mut(i));
        }
        Ok(g)
    }

    /// `max_{i,j} ||grad f_i - grad f_j||_inf`, zero exactly on the optimal set.
    pub fn grad_disagreement(&self, x: &BlockVector) -> Result<f64> {
        let g = self.gradient(x)?;
        let mut worst = 0.0_f64;
        for c in 0..self.block_dim {
            let comp = g.component(c);
            let hi = comp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = comp.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max(hi - lo);
        }
        Ok(worst)
    }
}

/// `f(x) = a/2 ||x - c||^2`, with `L = sigma = a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub c: Vec<f64>,
}

impl NodeFunction for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.a * x.iter().zip(&self.c).map(|(x, c)| (x - c) * (x - c)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, x), c) in out.iter_mut().zip(x).zip(&self.c) {
            *o = self.a * (x - c);
        }
    }

    fn value_change(&self, x: &[f64], d: &[f64]) -> f64 {
        0.5 * self.a
            * x.iter()
                .zip(d)
                .zip(&self.c)
                .map(|((x, d), c)| d * (2.0 * (x - c) + d))
                .sum::<f64>()
    }

    fn curvature(&self, _x: f64) -> Option<f64> {
        Some(self.a)
    }

    fn infimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Quadratic test objective with curvature `a_i` and centers `c`.
pub fn make_quadratic(a: &[f64], c: &[f64]) -> Result<SeparableObjective> {
    if a.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: c.len(),
        });
    }
    let nodes: Vec<Arc<dyn NodeFunction>> = a
        .iter()
        .zip(c)
        .map(|(&a, &c)| Arc::new(Quadratic { a, c: vec![c] }) as Arc<dyn NodeFunction>)
        .collect();
    SeparableObjective::new(nodes, a.to_vec(), Some(a.to_vec()))
}

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-t})` without overflow.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Scalar term `a/2 (x - c)^2 + log(1 + exp(b (x - d)))`.
///
/// Its second derivative lies in `[a, a + b^2/4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadLogistic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl QuadLogistic {
    pub fn lipschitz(&self) -> f64 {
        self.a + 0.25 * self.b * self.b
    }

    pub fn strong_convexity(&self) -> f64 {
        self.a
    }

    fn grad_scalar(&self, x: f64) -> f64 {
        self.a * (x - self.c) + self.b * logistic(self.b * (x - self.d))
    }
}

impl NodeFunction for QuadLogistic {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = x[0];
        0.5 * self.a * (x - self.c) * (x - self.c) + softplus(self.b * (x - self.d))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.grad_scalar(x[0]);
    }

    fn value_change(&self, x: &[f64], d: &[f64]) -> f64 {
        let (x, step) = (x[0], d[0]);
        let quad = 0.5 * self.a * step * (2.0 * (x - self.c) + step);
        let t = self.b * (x - self.d);
        let s = self.b * step;
        let soft = if s.abs() <= 1.0 {
            // (1 + e^{t+s}) / (1 + e^t) = 1 + logistic(t) (e^s - 1)
            (logistic(t) * s.exp_m1()).ln_1p()
        } else {
            softplus(t + s) - softplus(t)
        };
        quad + soft
    }

    fn curvature(&self, x: f64) -> Option<f64> {
        let s = logistic(self.b * (x - self.d));
        Some(self.a + self.b * self.b * s * (1.0 - s))
    }

    fn infimum(&self) -> Option<f64> {
        if self.a <= 0.0 {
            // the logistic arm decays to zero on one side; constant when b = 0
            return Some(if self.b == 0.0 { std::f64::consts::LN_2 } else { 0.0 });
        }
        // gradient is strictly increasing; bracket its root and bisect
        let (mut lo, mut hi) = (self.c - 1.0, self.c + 1.0);
        while self.grad_scalar(lo) > 0.0 {
            lo -= 2.0 * (hi - lo);
        }
        while self.grad_scalar(hi) < 0.0 {
            hi += 2.0 * (hi - lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.grad_scalar(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(self.value(&[0.5 * (lo + hi)]))
    }
}

/// Coefficients of the quadratic-plus-logistic test family.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadLogisticParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// Half-width of the coefficient draw interval.
pub const COEFF_RANGE: f64 = 15.0;

impl QuadLogisticParams {
    /// Coefficients drawn uniformly from `[-15, 15]` per node in the order
    /// `(a, b, c, d)`, with `a_i` replaced by its absolute value.
    pub fn random(n: usize, seed: u64) -> Self {
        Self::random_with_min_curvature(n, seed, 0.0)
    }

    /// As [`Self::random`], but `a_i` is mapped affinely from `[0, 15]` onto
    /// `[a_min, 15]` so every term is `a_min`-strongly convex.
    pub fn random_with_min_curvature(n: usize, seed: u64, a_min: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || rng.random_range(-COEFF_RANGE..=COEFF_RANGE);
        let mut p = QuadLogisticParams {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for _ in 0..n {
            let a = draw().abs();
            p.a.push(a_min + a * (COEFF_RANGE - a_min) / COEFF_RANGE);
            p.b.push(draw());
            p.c.push(draw());
            p.d.push(draw());
        }
        p
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn term(&self, i: usize) -> QuadLogistic {
        QuadLogistic {
            a: self.a[i],
            b: self.b[i],
            c: self.c[i],
            d: self.d[i],
        }
    }

    /// Objective with `L_i = a_i + b_i^2/4` and `sigma_i = a_i`.
    pub fn objective(&self) -> Result<SeparableObjective> {
        let n = self.a.len();
        for v in [&self.b, &self.c, &self.d] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some(i) = self.a.iter().position(|&a| a < 0.0) {
            return Err(Error::InvalidArgument(format!("a[{i}] must be nonnegative")));
        }
        let terms: Vec<QuadLogistic> = (0..n).map(|i| self.term(i)).collect();
        let lipschitz = terms.iter().map(QuadLogistic::lipschitz).collect();
        let sigma = terms.iter().map(QuadLogistic::strong_convexity).collect();
        let nodes = terms
            .into_iter()
            .map(|t| Arc::new(t) as Arc<dyn NodeFunction>)
            .collect();
        SeparableObjective::new(nodes, lipschitz, Some(sigma))
    }
}

/// Random quadratic-plus-logistic objective on `n` nodes.
pub fn make_quad_logistic(n: usize, seed: u64) -> Result<SeparableObjective> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    QuadLogisticParams::random(n, seed).objective()
}

/// `g(y) = f((y + shift) / alpha)`.
#[derive(Debug, Clone)]
struct Rescaled {
    inner: Arc<dyn NodeFunction>,
    alpha: f64,
    shift: Vec<f64>,
}

impl Rescaled {
    fn map(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.shift)
            .map(|(y, s)| (y + s) / self.alpha)
            .collect()
    }
}

impl NodeFunction for Rescaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.inner.value(&self.map(y))
    }

    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        self.inner.gradient(&self.map(y), out);
        for o in out.iter_mut() {
            *o /= self.alpha;
        }
    }

    fn value_change(&self, y: &[f64], d: &[f64]) -> f64 {
        let scaled: Vec<f64> = d.iter().map(|d| d / self.alpha).collect();
        self.inner.value_change(&self.map(y), &scaled)
    }

    fn curvature(&self, y: f64) -> Option<f64> {
        self.inner
            .curvature((y + self.shift[0]) / self.alpha)
            .map(|h| h / (self.alpha * self.alpha))
    }

    fn infimum(&self) -> Option<f64> {
        self.inner.infimum()
    }
}

/// Affine change of coordinates `y_i = alpha_i x_i - b / N`, which turns
/// `sum_i alpha_i x_i = b` into `sum_i y_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    pub alpha: Vec<f64>,
    pub shift: Vec<f64>,
}

impl CoordinateMap {
    pub fn to_original(&self, y: &BlockVector) -> BlockVector {
        let mut x = y.clone();
        for (i, &a) in self.alpha.iter().enumerate() {
            for (v, s) in x.block_mut(i).iter_mut().zip(&self.shift) {
                *v = (*v + s) / a;
            }
        }
        x
    }

    pub fn to_transformed(&self, x: &BlockVector) -> BlockVector {
        let mut y = x.clone();
        for (i, &a) in self.alpha.iter().enumerate() {
            for (v, s) in y.block_mut(i).iter_mut().zip(&self.shift) {
                *v = a * *v - s;
            }
        }
        y
    }
}

/// Rewrites `min f(x) s.t. sum_i alpha_i x_i = b` as an instance with the plain
/// coupling `sum_i y_i = 0`. Constants scale as `L_i / alpha_i^2`.
pub fn normalize_constraint(
    alpha: &[f64],
    b: &[f64],
    obj: &SeparableObjective,
) -> Result<(SeparableObjective, CoordinateMap)> {
    let n = obj.n_nodes();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    if b.len() != obj.block_dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.block_dim(),
            got: b.len(),
        });
    }
    if let Some(i) = alpha.iter().position(|&a| a == 0.0) {
        return Err(Error::SingularScaling(i));
    }
    let shift: Vec<f64> = b.iter().map(|v| v / n as f64).collect();
    let nodes = obj
        .nodes
        .iter()
        .zip(alpha)
        .map(|(f, &a)| {
            Arc::new(Rescaled {
                inner: Arc::clone(f),
                alpha: a,
                shift: shift.clone(),
            }) as Arc<dyn NodeFunction>
        })
        .collect();
    let lipschitz = obj
        .lipschitz
        .iter()
        .zip(alpha)
        .map(|(l, a)| l / (a * a))
        .collect();
    let sigma = obj.strong_convexity.as_ref().map(|s| {
        s.iter()
            .zip(alpha)
            .map(|(s, a)| s / (a * a))
            .collect::<Vec<_>>()
    });
    let transformed = SeparableObjective::new(nodes, lipschitz, sigma)?;
    Ok((
        transformed,
        CoordinateMap {
            alpha: alpha.to_vec(),
            shift,
        },
    ))
}
