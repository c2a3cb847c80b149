use crate::error::{Error, Result};

/// `N` blocks of dimension `n` stored row-major: block `i` is `data[i*n..(i+1)*n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    dim: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(n_blocks: usize, dim: usize) -> Self {
        BlockVector {
            dim,
            data: vec![0.0; n_blocks * dim],
        }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len(),
            });
        }
        Ok(BlockVector { dim, data })
    }

    /// Scalar blocks.
    pub fn from_scalars(values: Vec<f64>) -> Self {
        BlockVector {
            dim: 1,
            data: values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Sum of all blocks.
    pub fn block_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for chunk in self.data.chunks_exact(self.dim) {
            for (a, b) in s.iter_mut().zip(chunk) {
                *a += b;
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `||sum_i x_i||_inf`.
    pub fn coupling_residual(&self) -> f64 {
        self.block_sum().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Component `c` of every block, as a length-`N` vector.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.dim).copied().collect()
    }
}
