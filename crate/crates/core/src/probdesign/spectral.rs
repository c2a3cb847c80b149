use nalgebra::{DMatrix, DVector};

use super::distribution::PathDistribution;
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, min_eigenpair, sorted_eigen};

/// Per-path decrease matrix on the path's own indices (`tau x tau`):
/// `diag(1/L) - l l^T / sum(l)` with `l_i = 1/L_i`.
pub fn g_path(lipschitz: &[f64], path: &[usize]) -> DMatrix<f64> {
    let l: Vec<f64> = path.iter().map(|&i| 1.0 / lipschitz[i]).collect();
    let s: f64 = l.iter().sum();
    DMatrix::from_fn(path.len(), path.len(), |a, b| {
        let diag = if a == b { l[a] } else { 0.0 };
        diag - l[a] * l[b] / s
    })
}

/// `v^T G_N v` without forming the matrix.
pub fn path_quadratic_form(lipschitz: &[f64], path: &[usize], v: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut lv = 0.0;
    let mut lvv = 0.0;
    for &i in path {
        let l = 1.0 / lipschitz[i];
        s += l;
        lv += l * v[i];
        lvv += l * v[i] * v[i];
    }
    lvv - lv * lv / s
}

/// Adds `weight * G_N` into the `N x N` matrix `m`.
pub(crate) fn scatter_path(m: &mut DMatrix<f64>, lipschitz: &[f64], path: &[usize], weight: f64) {
    let s: f64 = path.iter().map(|&i| 1.0 / lipschitz[i]).sum();
    for &i in path {
        let li = 1.0 / lipschitz[i];
        m[(i, i)] += weight * li;
        for &j in path {
            m[(i, j)] -= weight * li / lipschitz[j] / s;
        }
    }
}

/// `sum_N p_N G_N` for explicit path weights, with no support checks.
pub fn assemble_matrix(lipschitz: &[f64], paths: &[Vec<usize>], p: &[f64]) -> DMatrix<f64> {
    let n = lipschitz.len();
    let mut m = DMatrix::zeros(n, n);
    for (path, &w) in paths.iter().zip(p) {
        if w != 0.0 {
            scatter_path(&mut m, lipschitz, path, w);
        }
    }
    m
}

/// Expected decrease matrix `G_tau` with its sorted spectrum.
#[derive(Debug, Clone)]
pub struct GTau {
    matrix: DMatrix<f64>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
}

impl GTau {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let (eigvals, eigvecs) = sorted_eigen(&sym);
        GTau {
            matrix: sym,
            eigvals,
            eigvecs,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigvals.last().expect("nonempty spectrum")
    }

    /// `u^T G u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        u.dot(&(&self.matrix * &u))
    }

    /// Pseudoinverse built from the eigendecomposition; eigenvalues below
    /// `1e-12 * lambda_max` are treated as zero.
    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        let cutoff = 1e-12 * self.lambda_max();
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for (k, &lam) in self.eigvals.iter().enumerate() {
            if lam > cutoff {
                let v = self.eigvecs.column(k);
                out += (v * v.transpose()) / lam;
            }
        }
        out
    }
}

fn check_connected_support(n: usize, paths: &[Vec<usize>], p: &[f64]) -> Result<()> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (path, &w) in paths.iter().zip(p) {
        if w <= 0.0 {
            continue;
        }
        for pair in path.windows(2) {
            let (a, b) = (find(&mut parent, pair[0]), find(&mut parent, pair[1]));
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    if (1..n).all(|v| find(&mut parent, v) == root) {
        Ok(())
    } else {
        Err(Error::DisconnectedSupport)
    }
}

/// Assembles `G_tau = sum_N p_N G_N`.
///
/// Implicit complete-graph distributions are supported when their node weights
/// are proportional to `1/L_i`; then
/// `G_tau = (tau-1)/(N-1) [diag(1/L) - l l^T / sum(l)]`.
pub fn assemble_g_tau(lipschitz: &[f64], dist: &PathDistribution) -> Result<GTau> {
    let n = dist.n_nodes();
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lipschitz.len(),
        });
    }
    if let (Some(paths), Some(p)) = (dist.pathset(), dist.probabilities()) {
        check_connected_support(n, paths.paths(), p)?;
        return Ok(GTau::from_matrix(assemble_matrix(lipschitz, paths.paths(), p)));
    }
    let w = dist.node_weights().expect("implicit distribution has node weights");
    let ratio0 = w[0] * lipschitz[0];
    let proportional = w
        .iter()
        .zip(lipschitz)
        .all(|(w, l)| ((w * l) / ratio0 - 1.0).abs() <= 1e-10);
    if !proportional {
        return Err(Error::InvalidArgument(
            "G_tau of an implicit complete-graph distribution is only available for inverse-Lipschitz weights; enumerate the paths instead".into(),
        ));
    }
    let tau = dist.tau();
    let scale = (tau - 1) as f64 / (n - 1) as f64;
    let l: Vec<f64> = lipschitz.iter().map(|v| 1.0 / v).collect();
    let s: f64 = l.iter().sum();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { l[i] } else { 0.0 };
        scale * (diag - l[i] * l[j] / s)
    });
    Ok(GTau::from_matrix(m))
}

/// `min { u^T G u : ||u|| = 1, e^T u = 0 }` and a minimizing unit vector.
pub fn lambda2_pair(g: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let b = complement_basis(g.nrows());
    let reduced = b.transpose() * g * &b;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let (val, y) = min_eigenpair(&reduced);
    (val, b * y)
}

/// Second-smallest eigenvalue of `G_tau` (algebraic connectivity).
pub fn lambda2(gt: &GTau) -> f64 {
    lambda2_pair(gt.matrix()).0
}

/// `min { x^T G x / x^T diag(1/sigma) x : e^T x = 0 }` together with a
/// minimizer normalized to `x^T diag(1/sigma) x = 1`. No clamping.
pub fn sigma_g_pair(g: &DMatrix<f64>, sigma: &[f64]) -> Result<(f64, DVector<f64>)> {
    let n = g.nrows();
    if sigma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sigma.len(),
        });
    }
    if let Some(i) = sigma.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "strong convexity of node {i} must be positive"
        )));
    }
    let b = complement_basis(n);
    let a = b.transpose() * g * &b;
    let a = (&a + a.transpose()) * 0.5;
    let dinv = DMatrix::from_diagonal(&DVector::from_iterator(n, sigma.iter().map(|s| 1.0 / s)));
    let m = b.transpose() * dinv * &b;
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("metric is not positive definite".into()))?;
    let c = chol.l();
    let c_inv = c
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let k = &c_inv * a * c_inv.transpose();
    let k = (&k + k.transpose()) * 0.5;
    let (val, y) = min_eigenpair(&k);
    let w = c_inv.transpose() * y;
    Ok((val, b * w))
}

/// Strong-convexity modulus of `f` in the dual norm: the largest `s` with
/// `s I <= D^{1/2} (G + zeta e e^T) D^{1/2}` for some `zeta >= 0`, clamped to `[0, 1]`.
pub fn compute_sigma_g(gt: &GTau, sigma: &[f64]) -> Result<f64> {
    Ok(sigma_g_pair(gt.matrix(), sigma)?.0.clamp(0.0, 1.0))
}
