//! Minimal compressed-sparse-row matrix.
//!
//! The encoder multiplies a fixed sparse matrix (normalized adjacency,
//! community pooling) by dense activation matrices every step, so this type
//! supports exactly that: construction from coordinate triplets, `S · D`,
//! and `Sᵀ · D` for the backward pass. Entries are stored row-major with
//! sorted column indices; duplicate coordinates are summed during
//! construction so edge lists need no pre-deduplication.

use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView2};

/// Immutable sparse matrix in compressed-sparse-row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    /// Row `i` occupies `indices[indptr[i]..indptr[i+1]]`.
    indptr: Vec<usize>,
    /// Column indices, sorted within each row.
    indices: Vec<usize>,
    /// Entry values, aligned with `indices`.
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed; explicit zeros are kept (harmless and rare).
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= nrows || c >= ncols {
                return Err(CoreError::InvalidParameter {
                    name: "triplets",
                    message: format!("entry ({r}, {c}) outside {nrows}x{ncols} matrix"),
                });
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len());
        indptr.push(0);
        let mut row = 0usize;
        for (r, c, v) in entries {
            while row < r {
                indptr.push(indices.len());
                row += 1;
            }
            if indices.len() > *indptr.last().expect("indptr never empty")
                && *indices.last().expect("nonempty") == c
            {
                *data.last_mut().expect("aligned with indices") += v;
            } else {
                indices.push(c);
                data.push(v);
            }
        }
        while row < nrows {
            indptr.push(indices.len());
            row += 1;
        }
        Ok(Self { nrows, ncols, indptr, indices, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.data[span])
    }

    /// Dense product `self · rhs`; `rhs` must have `self.ncols` rows.
    pub fn dot_dense(&self, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.ncols {
            return Err(CoreError::ShapeMismatch {
                op: "sparse-dense product",
                lhs: (self.nrows, self.ncols),
                rhs: (rhs.nrows(), rhs.ncols()),
            });
        }
        let mut out = Array2::zeros((self.nrows, rhs.ncols()));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                acc.scaled_add(v, &rhs.row(j));
            }
        }
        Ok(out)
    }

    /// Dense product with the transpose, `selfᵀ · rhs`; `rhs` must have
    /// `self.nrows` rows. Used by backward passes without materializing
    /// the transposed matrix.
    pub fn t_dot_dense(&self, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.nrows {
            return Err(CoreError::ShapeMismatch {
                op: "transposed sparse-dense product",
                lhs: (self.ncols, self.nrows),
                rhs: (rhs.nrows(), rhs.ncols()),
            });
        }
        let mut out = Array2::zeros((self.ncols, rhs.ncols()));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let src = rhs.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.row_mut(j).scaled_add(v, &src);
            }
        }
        Ok(out)
    }

    /// Materializes the dense equivalent (tests and tiny matrices only).
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[[i, j]] += v;
            }
        }
        out
    }
}
