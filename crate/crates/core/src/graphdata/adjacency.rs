use ndarray::Array2;

use super::GraphBundle;
use crate::error::ensure_shape;
use crate::{Matrix, Result};

/// `D̃^{-1/2}(A+I)D̃^{-1/2}` in compressed sparse row form.
///
/// Symmetric, with a strictly positive diagonal. Holds `2m + n` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

pub fn normalize_adjacency(g: &GraphBundle) -> NormalizedAdjacency {
    NormalizedAdjacency::from_edges(g.num_nodes(), g.edges())
}

/// Sparse-dense product `adj · h`.
pub fn spmm(adj: &NormalizedAdjacency, h: &Matrix) -> Result<Matrix> {
    adj.spmm(h)
}

impl NormalizedAdjacency {
    /// Build from undirected edges with endpoints `< n`; neither self-loops
    /// nor duplicates may be present.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbours: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(u, v) in edges {
            neighbours[u].push(v);
            neighbours[v].push(u);
        }
        let deg: Vec<f64> = neighbours.iter().map(|nb| nb.len() as f64).collect();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n + 2 * edges.len());
        let mut values = Vec::with_capacity(n + 2 * edges.len());
        indptr.push(0);
        for (i, mut nb) in neighbours.into_iter().enumerate() {
            nb.sort_unstable();
            for j in nb {
                indices.push(j);
                values.push(1.0 / (deg[i] * deg[j]).sqrt());
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_edges(n, &[])
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Stored entries, self-loops included.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    pub fn spmm(&self, h: &Matrix) -> Result<Matrix> {
        ensure_shape(h.nrows() == self.n, || {
            format!("adjacency is {n}x{n} but operand has {} rows", h.nrows(), n = self.n)
        })?;
        let h = h.as_standard_layout();
        let hs = h.as_slice().expect("standard layout");
        let k = h.ncols();
        let mut out = vec![0.0; self.n * k];
        for i in 0..self.n {
            let orow = &mut out[i * k..(i + 1) * k];
            for (j, a) in self.row(i) {
                for (o, x) in orow.iter_mut().zip(&hs[j * k..(j + 1) * k]) {
                    *o += a * x;
                }
            }
        }
        Ok(Array2::from_shape_vec((self.n, k), out).expect("shape"))
    }
}
