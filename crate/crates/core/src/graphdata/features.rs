use ndarray::Array2;

use crate::error::ensure_shape;
use crate::{Error, Matrix, Result};

/// Dense node-feature matrix with a cached row-sparse index.
///
/// Bag-of-words features are mostly zero, so products against weight
/// matrices walk the nonzeros when the matrix is sparse enough. A column
/// mask zeroes whole feature columns without copying the matrix.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    dense: Matrix,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

/// Above this fill ratio the dense GEMM path is faster than the nonzero walk.
const SPARSE_DENSITY_LIMIT: f64 = 0.2;

impl FeatureMatrix {
    pub fn new(dense: Matrix) -> Result<Self> {
        if dense.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGraph("non-finite feature value".into()));
        }
        let dense = dense.as_standard_layout().into_owned();
        let mut indptr = Vec::with_capacity(dense.nrows() + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in dense.rows() {
            indices.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j));
            indptr.push(indices.len());
        }
        Ok(Self {
            dense,
            indptr,
            indices,
        })
    }

    pub fn dense(&self) -> &Matrix {
        &self.dense
    }

    pub fn nrows(&self) -> usize {
        self.dense.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.dense.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    fn is_sparse(&self) -> bool {
        let cells = (self.nrows() * self.ncols()).max(1) as f64;
        (self.nnz() as f64) / cells < SPARSE_DENSITY_LIMIT
    }

    /// `X·W`, treating columns whose mask entry is `false` as zero.
    pub fn matmul(&self, w: &Matrix, column_mask: Option<&[bool]>) -> Result<Matrix> {
        ensure_shape(w.nrows() == self.ncols(), || {
            format!("features are {}x{} but weight has {} rows", self.nrows(), self.ncols(), w.nrows())
        })?;
        check_mask(column_mask, self.ncols())?;
        let k = w.ncols();
        if !self.is_sparse() {
            return Ok(match column_mask {
                None => self.dense.dot(w),
                Some(mask) => self.dense.dot(&mask_rows(w, mask)),
            });
        }
        let w = w.as_standard_layout();
        let ws = w.as_slice().expect("standard layout");
        let xs = self.dense.as_slice().expect("standard layout");
        let d = self.ncols();
        let mut out = vec![0.0; self.nrows() * k];
        for (i, out_row) in out.chunks_mut(k.max(1)).enumerate().take(self.nrows()) {
            for &j in &self.indices[self.indptr[i]..self.indptr[i + 1]] {
                if column_mask.is_some_and(|m| !m[j]) {
                    continue;
                }
                let x = xs[i * d + j];
                for (o, wv) in out_row.iter_mut().zip(&ws[j * k..(j + 1) * k]) {
                    *o += x * wv;
                }
            }
        }
        Ok(Array2::from_shape_vec((self.nrows(), k), out).expect("shape"))
    }

    /// `Xᵀ·G` with the same column-mask semantics as [`Self::matmul`]: rows
    /// of the result belonging to masked columns are zero.
    pub fn transpose_matmul(&self, g: &Matrix, column_mask: Option<&[bool]>) -> Result<Matrix> {
        ensure_shape(g.nrows() == self.nrows(), || {
            format!("features have {} rows but gradient has {}", self.nrows(), g.nrows())
        })?;
        check_mask(column_mask, self.ncols())?;
        let k = g.ncols();
        if !self.is_sparse() {
            let out = self.dense.t().dot(g);
            return Ok(match column_mask {
                None => out,
                Some(mask) => mask_rows(&out, mask),
            });
        }
        let g = g.as_standard_layout();
        let gs = g.as_slice().expect("standard layout");
        let xs = self.dense.as_slice().expect("standard layout");
        let d = self.ncols();
        let mut out = vec![0.0; d * k];
        for i in 0..self.nrows() {
            let grow = &gs[i * k..(i + 1) * k];
            for &j in &self.indices[self.indptr[i]..self.indptr[i + 1]] {
                if column_mask.is_some_and(|m| !m[j]) {
                    continue;
                }
                let x = xs[i * d + j];
                for (o, gv) in out[j * k..(j + 1) * k].iter_mut().zip(grow) {
                    *o += x * gv;
                }
            }
        }
        Ok(Array2::from_shape_vec((d, k), out).expect("shape"))
    }

    /// Copy with masked columns zeroed.
    pub fn masked(&self, column_mask: &[bool]) -> Result<Self> {
        check_mask(Some(column_mask), self.ncols())?;
        let mut dense = self.dense.clone();
        for (j, keep) in column_mask.iter().enumerate() {
            if !keep {
                dense.column_mut(j).fill(0.0);
            }
        }
        Self::new(dense)
    }
}

fn check_mask(mask: Option<&[bool]>, ncols: usize) -> Result<()> {
    match mask {
        Some(m) => ensure_shape(m.len() == ncols, || {
            format!("column mask has {} entries for {} columns", m.len(), ncols)
        }),
        None => Ok(()),
    }
}

fn mask_rows(w: &Matrix, mask: &[bool]) -> Matrix {
    let mut out = w.clone();
    for (j, keep) in mask.iter().enumerate() {
        if !keep {
            out.row_mut(j).fill(0.0);
        }
    }
    out
}
