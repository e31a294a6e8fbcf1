//! Small dense/sparse linear algebra kernels used by the oracles.

use serde::{Deserialize, Serialize};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out = Aᵀ y`
    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
    }

    /// Dense product `self · other` (ikj loop order).
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from row-major sorted `(row, col, value)` triplets.
    pub fn from_sorted_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet out of range");
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let (idx, val) = self.row(i);
            *o = idx.iter().zip(val).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&j, v) in idx.iter().zip(val) {
                out[j] += yi * v;
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                d.data[i * self.cols + j] = v;
            }
        }
        d
    }
}

/// Either storage format; both expose the same products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Matrix {
    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(d) => d.rows,
            Matrix::Sparse(s) => s.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(d) => d.cols,
            Matrix::Sparse(s) => s.cols,
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(d) => d.data.iter().filter(|v| **v != 0.0).count(),
            Matrix::Sparse(s) => s.nnz(),
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Matrix::Dense(d) => d.mul_vec(x, out),
            Matrix::Sparse(s) => s.mul_vec(x, out),
        }
    }

    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Matrix::Dense(d) => d.mul_t_vec(y, out),
            Matrix::Sparse(s) => s.mul_t_vec(y, out),
        }
    }

    /// Column sums of absolute values, `Σ_i |A_ij|` for each `j`.
    pub fn col_abs_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols()];
        match self {
            Matrix::Dense(d) => {
                for i in 0..d.rows {
                    for (s, a) in sums.iter_mut().zip(d.row(i)) {
                        *s += a.abs();
                    }
                }
            }
            Matrix::Sparse(s) => {
                for (&j, v) in s.indices.iter().zip(&s.values) {
                    sums[j] += v.abs();
                }
            }
        }
        sums
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_products_agree() {
        let trip = vec![(0, 1, 2.0), (1, 0, -1.0), (1, 2, 3.0)];
        let s = CsrMatrix::from_sorted_triplets(2, 3, &trip);
        let d = s.to_dense();
        let x = [1.0, 2.0, 3.0];
        let (mut a, mut b) = (vec![0.0; 2], vec![0.0; 2]);
        s.mul_vec(&x, &mut a);
        d.mul_vec(&x, &mut b);
        assert_eq!(a, vec![4.0, 8.0]);
        assert_eq!(a, b);
        let y = [1.0, -2.0];
        let (mut c, mut e) = (vec![0.0; 3], vec![0.0; 3]);
        s.mul_t_vec(&y, &mut c);
        d.mul_t_vec(&y, &mut e);
        assert_eq!(c, vec![2.0, 2.0, -6.0]);
        assert_eq!(c, e);
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        let b = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]);
        assert_eq!(a.matmul(&b).data, vec![11.0, 4.0]);
    }
}
