//! Full-gradient comparison methods. Both keep `sum_i x_i` fixed.

use rcdnet::{BlockVector, Network, Result, SeparableObjective};

fn gradients(obj: &SeparableObjective, x: &BlockVector) -> Result<Vec<f64>> {
    Ok(obj.gradient(x)?.into_vec())
}

/// Full gradient step on the coupling subspace with the single constant
/// `L_max = max_i L_i`: `x_i -= (g_i - mean g) / L_max`. Returns `f` after
/// each of `iters` steps (index 0 is the start).
pub fn projected_gradient(
    obj: &SeparableObjective,
    x0: &BlockVector,
    iters: usize,
) -> Result<(BlockVector, Vec<f64>)> {
    let l_max = obj.lipschitz().iter().copied().fold(0.0, f64::max);
    let n = obj.n_nodes();
    let dim = obj.block_dim();
    let mut x = x0.clone();
    let mut values = vec![obj.eval(&x)?];
    for _ in 0..iters {
        let g = gradients(obj, &x)?;
        for c in 0..dim {
            let mean = (0..n).map(|i| g[i * dim + c]).sum::<f64>() / n as f64;
            for i in 0..n {
                x.block_mut(i)[c] -= (g[i * dim + c] - mean) / l_max;
            }
        }
        values.push(obj.eval(&x)?);
    }
    Ok((x, values))
}

/// Symmetric Metropolis weights `1 / (max(deg_i, deg_j) + 1)` on the edges.
pub fn metropolis_weights(g: &Network) -> Vec<(usize, usize, f64)> {
    g.edges()
        .iter()
        .map(|&(i, j)| (i, j, 1.0 / (g.degree(i).max(g.degree(j)) + 1) as f64))
        .collect()
}

/// Center-free method `x_i += s * sum_j w_ij (g_j - g_i)` with Metropolis
/// weights and scale `s = 1 / (2 L_max)`.
pub fn center_free(
    obj: &SeparableObjective,
    g: &Network,
    x0: &BlockVector,
    iters: usize,
) -> Result<(BlockVector, Vec<f64>)> {
    let l_max = obj.lipschitz().iter().copied().fold(0.0, f64::max);
    let scale = 1.0 / (2.0 * l_max);
    let weights = metropolis_weights(g);
    let dim = obj.block_dim();
    let mut x = x0.clone();
    let mut values = vec![obj.eval(&x)?];
    for _ in 0..iters {
        let grad = gradients(obj, &x)?;
        for &(i, j, w) in &weights {
            for c in 0..dim {
                let flow = scale * w * (grad[j * dim + c] - grad[i * dim + c]);
                x.block_mut(i)[c] += flow;
                x.block_mut(j)[c] -= flow;
            }
        }
        values.push(obj.eval(&x)?);
    }
    Ok((x, values))
}
