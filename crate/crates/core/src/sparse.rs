//! Compressed sparse column matrices.
//!
//! [`SparseMatrix`] stores real values, [`IntMatrix`] stores the small integer
//! coefficients of boundary operators so that `∂∂ = 0` can be checked exactly.

use serde::{Deserialize, Serialize};

/// Real sparse matrix in compressed column layout, rows sorted within each column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
    /// Set when the matrix was assembled as symmetric (both triangles stored).
    pub symmetric: bool,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let trip: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let mut m = Self::from_triplets(d.len(), d.len(), &trip);
        m.symmetric = true;
        m
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(r, c, _) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of range");
            counts[c + 1] += 1;
        }
        for c in 0..ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; trip.len()];
        let mut vals = vec![0.0; trip.len()];
        for &(r, c, v) in trip {
            rows[next[c]] = r;
            vals[next[c]] = v;
            next[c] += 1;
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(trip.len());
        let mut values = Vec::with_capacity(trip.len());
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for c in 0..ncols {
            buf.clear();
            buf.extend((counts[c]..counts[c + 1]).map(|k| (rows[k], vals[k])));
            buf.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < buf.len() {
                let r = buf[k].0;
                let mut s = 0.0;
                while k < buf.len() && buf[k].0 == r {
                    s += buf[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    row_idx.push(r);
                    values.push(s);
                }
            }
            col_ptr[c + 1] = row_idx.len();
        }
        Self { nrows, ncols, col_ptr, row_idx, values, symmetric: false }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let s = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        match s.binary_search(&i) {
            Ok(k) => self.values[self.col_ptr[j] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).map(|(i, v)| v * x[i]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for r in 0..self.nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                row_idx[next[i]] = j;
                values[next[i]] = v;
                next[i] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr: counts,
            row_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, b: &SparseMatrix) -> Self {
        assert_eq!(self.ncols, b.nrows);
        let mut col_ptr = vec![0usize; b.ncols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut pattern: Vec<usize> = Vec::new();
        for j in 0..b.ncols {
            pattern.clear();
            for (k, bkj) in b.col(j) {
                for (i, aik) in self.col(k) {
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        pattern.push(i);
                    }
                    acc[i] += aik * bkj;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                if acc[i] != 0.0 {
                    row_idx.push(i);
                    values.push(acc[i]);
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        Self { nrows: self.nrows, ncols: b.ncols, col_ptr, row_idx, values, symmetric: false }
    }

    /// `A D Aᵀ` for a diagonal `D` given by `d` (one entry per column of `A`).
    pub fn gram(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut scaled = self.clone();
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                scaled.values[k] *= d[j];
            }
        }
        let mut m = scaled.matmul(&self.transpose());
        m.symmetric = true;
        m
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trip = self.triplets();
        trip.extend(other.triplets());
        let mut m = Self::from_triplets(self.nrows, self.ncols, &trip);
        m.symmetric = self.symmetric && other.symmetric;
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.ncols)
            .flat_map(|j| self.col(j).map(move |(i, v)| (i, j, v)))
            .collect()
    }

    /// Submatrix `A[rows, cols]` with the given index lists (order preserved).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut rmap = vec![usize::MAX; self.nrows];
        for (k, &r) in rows.iter().enumerate() {
            rmap[r] = k;
        }
        let mut col_ptr = vec![0usize; cols.len() + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for (jj, &j) in cols.iter().enumerate() {
            buf.clear();
            buf.extend(self.col(j).filter(|&(i, _)| rmap[i] != usize::MAX).map(|(i, v)| (rmap[i], v)));
            buf.sort_unstable_by_key(|e| e.0);
            for &(i, v) in &buf {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr[jj + 1] = row_idx.len();
        }
        let symmetric = self.symmetric && rows == cols;
        Self { nrows: rows.len(), ncols: cols.len(), col_ptr, row_idx, values, symmetric }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                d[i][j] = v;
            }
        }
        d
    }

    /// Adjacency lists of the off-diagonal nonzero pattern of a square matrix.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        assert_eq!(self.nrows, self.ncols);
        let mut adj = vec![Vec::new(); self.nrows];
        for j in 0..self.ncols {
            for (i, _) in self.col(j) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Largest absolute asymmetry `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = self.add(&t.scale(-1.0));
        d.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Integer sparse matrix used for boundary operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<i64>,
}

impl IntMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, i64)]) -> Self {
        let f: Vec<_> = trip.iter().map(|&(r, c, v)| (r, c, v as f64)).collect();
        let m = SparseMatrix::from_triplets(nrows, ncols, &f);
        Self {
            nrows,
            ncols,
            col_ptr: m.col_ptr,
            row_idx: m.row_idx,
            values: m.values.iter().map(|&v| v as i64).collect(),
        }
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Exact integer product `A B`, returned as triplets with nonzero values only.
    pub fn matmul_exact(&self, b: &IntMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0i64; self.nrows];
        let mut touched = Vec::new();
        let mut out = Vec::new();
        for j in 0..b.ncols {
            touched.clear();
            for (k, bkj) in b.col(j) {
                for (i, aik) in self.col(k) {
                    if acc[i] == 0 {
                        touched.push(i);
                    }
                    acc[i] += aik * bkj;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &i in &touched {
                if acc[i] != 0 {
                    out.push((i, j, acc[i]));
                }
                acc[i] = 0;
            }
        }
        out
    }

    pub fn to_f64(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|&v| v as f64).collect(),
            symmetric: false,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s x`.
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += s * xi);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

pub fn scatter(vals: &[f64], idx: &[usize], out: &mut [f64]) {
    for (&i, &v) in idx.iter().zip(vals) {
        out[i] = v;
    }
}
