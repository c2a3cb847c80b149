//! Small dense helpers shared by the spectral code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Orthonormal basis of the complement of `e = (1, ..., 1)` (Helmert columns).
pub fn complement_basis(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            b[(i, k - 1)] = scale;
        }
        b[(k, k - 1)] = -(k as f64) * scale;
    }
    b
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue and a unit eigenvector of a symmetric matrix.
pub fn min_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (vals, vecs) = sorted_eigen(m);
    (vals[0], vecs.column(0).into_owned())
}

/// Euclidean projection onto the probability simplex (sort and threshold).
/// Ties in the sort are broken by index, so the result is deterministic.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        cumsum += v[i];
        let t = (cumsum - 1.0) / (rank + 1) as f64;
        if v[i] - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
