//! Sparse up-looking Cholesky with rank-revealing pivot skipping.

use crate::error::{Error, Result};
use crate::sparse::{norm, SparseMatrix};

use super::ordering::inverse_permutation;

const NONE: usize = usize::MAX;

/// Default pivot threshold relative to the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-12;

/// Relative residual above which a checked solve reports `b` outside the image.
pub const IMAGE_TOL: f64 = 1e-6;

/// Elimination tree and column structure of `P M Pᵀ`.
#[derive(Clone, Debug)]
pub struct Symbolic {
    pub perm: Vec<usize>,
    pub pinv: Vec<usize>,
    pub parent: Vec<usize>,
    pub l_col_ptr: Vec<usize>,
}

impl Symbolic {
    pub fn nnz(&self) -> usize {
        *self.l_col_ptr.last().unwrap_or(&0)
    }
}

/// Factor `P M Pᵀ = L Lᵀ` where columns with vanishing pivots are zero.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    pub perm: Vec<usize>,
    pub pinv: Vec<usize>,
    /// Lower triangular, diagonal entry first in each column.
    pub l: SparseMatrix,
    pub dead: Vec<bool>,
    pub rank: usize,
    /// Absolute threshold used to declare a pivot zero.
    pub pivot_threshold: f64,
    matrix: SparseMatrix,
}

/// Upper triangle of `P M Pᵀ` in CSC form.
fn permuted_upper(m: &SparseMatrix, pinv: &[usize]) -> SparseMatrix {
    let n = m.ncols;
    let mut counts = vec![0usize; n + 1];
    for j in 0..n {
        let cj = pinv[j];
        for (i, _) in m.col(j) {
            let ci = pinv[i];
            if ci <= cj {
                counts[ci.max(cj) + 1] += 1;
            }
        }
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let col_ptr = counts.clone();
    let mut next = counts;
    let mut row_idx = vec![0; col_ptr[n]];
    let mut values = vec![0.0; col_ptr[n]];
    for j in 0..n {
        let cj = pinv[j];
        for (i, v) in m.col(j) {
            let ci = pinv[i];
            if ci <= cj {
                let p = next[cj];
                row_idx[p] = ci;
                values[p] = v;
                next[cj] += 1;
            }
        }
    }
    SparseMatrix { nrows: n, ncols: n, col_ptr, row_idx, values, symmetric: false }
}

fn etree(cu: &SparseMatrix) -> Vec<usize> {
    let n = cu.ncols;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for (i, _) in cu.col(k) {
            let mut i = i;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal) in topological order.
fn ereach(cu: &SparseMatrix, k: usize, parent: &[usize], flag: &mut [usize], path: &mut Vec<usize>, out: &mut Vec<usize>) {
    out.clear();
    flag[k] = k;
    for (i, _) in cu.col(k) {
        let mut i = i;
        if i > k {
            continue;
        }
        path.clear();
        while flag[i] != k {
            path.push(i);
            flag[i] = k;
            i = parent[i];
        }
        out.extend(path.iter().rev());
    }
    // `out` holds several reversed chains; reversing the whole list puts each
    // node before its ancestors.
    out.reverse();
}

/// Symbolic analysis of a symmetric matrix under the ordering `perm`.
pub fn symbolic(m: &SparseMatrix, perm: &[usize]) -> Result<Symbolic> {
    let n = m.ncols;
    if m.nrows != n || perm.len() != n {
        return Err(Error::IndexMismatch(format!("matrix {}x{} with ordering of length {}", m.nrows, n, perm.len())));
    }
    let pinv = inverse_permutation(perm);
    let cu = permuted_upper(m, &pinv);
    let parent = etree(&cu);
    let mut counts = vec![1usize; n];
    let mut flag = vec![NONE; n];
    let (mut path, mut row) = (Vec::new(), Vec::new());
    for k in 0..n {
        ereach(&cu, k, &parent, &mut flag, &mut path, &mut row);
        for &i in &row {
            counts[i] += 1;
        }
    }
    let mut l_col_ptr = vec![0; n + 1];
    for k in 0..n {
        l_col_ptr[k + 1] = l_col_ptr[k] + counts[k];
    }
    Ok(Symbolic { perm: perm.to_vec(), pinv, parent, l_col_ptr })
}

/// Numeric factorization of a positive semidefinite matrix.
///
/// Pivots at or below `pivot_tol` times the largest diagonal entry are treated as
/// zero and their columns dropped; a pivot below minus that threshold is an error.
pub fn numeric(sym: &Symbolic, m: &SparseMatrix, pivot_tol: f64) -> Result<CholeskyFactor> {
    let n = m.ncols;
    let cu = permuted_upper(m, &sym.pinv);
    let dmax = m.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    let thr = pivot_tol * dmax;
    let nnz = sym.nnz();
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0f64; nnz];
    let mut fill = sym.l_col_ptr[..n].to_vec();
    let mut dead = vec![false; n];
    let mut x = vec![0.0f64; n];
    let mut flag = vec![NONE; n];
    let (mut path, mut pattern) = (Vec::new(), Vec::new());
    for k in 0..n {
        ereach(&cu, k, &sym.parent, &mut flag, &mut path, &mut pattern);
        for (i, v) in cu.col(k) {
            x[i] += v;
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &pattern {
            let xi = x[i];
            x[i] = 0.0;
            let lki = if dead[i] {
                0.0
            } else {
                let start = sym.l_col_ptr[i];
                let lki = xi / values[start];
                for p in start + 1..fill[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                lki
            };
            row_idx[fill[i]] = k;
            values[fill[i]] = lki;
            fill[i] += 1;
        }
        let p = fill[k];
        row_idx[p] = k;
        if d > thr {
            values[p] = d.sqrt();
        } else if d >= -thr {
            values[p] = 0.0;
            dead[k] = true;
        } else {
            return Err(Error::NotPsd(format!("pivot {d:.3e} at step {k} below -{thr:.3e}")));
        }
        fill[k] += 1;
    }
    let rank = dead.iter().filter(|d| !**d).count();
    let l = SparseMatrix { nrows: n, ncols: n, col_ptr: sym.l_col_ptr.clone(), row_idx, values, symmetric: false };
    Ok(CholeskyFactor {
        perm: sym.perm.clone(),
        pinv: sym.pinv.clone(),
        l,
        dead,
        rank,
        pivot_threshold: thr,
        matrix: m.clone(),
    })
}

/// Symbolic plus numeric factorization.
pub fn cholesky(m: &SparseMatrix, perm: &[usize], pivot_tol: f64) -> Result<CholeskyFactor> {
    numeric(&symbolic(m, perm)?, m, pivot_tol)
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn nnz(&self) -> usize {
        self.l.nnz()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Applies the factored pseudoinverse without checking the residual.
    pub fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let l = &self.l;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let start = l.col_ptr[j];
            if self.dead[j] {
                y[j] = 0.0;
                continue;
            }
            y[j] /= l.values[start];
            let yj = y[j];
            for p in start + 1..l.col_ptr[j + 1] {
                y[l.row_idx[p]] -= l.values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let start = l.col_ptr[j];
            if self.dead[j] {
                y[j] = 0.0;
                continue;
            }
            let mut s = y[j];
            for p in start + 1..l.col_ptr[j + 1] {
                s -= l.values[p] * y[l.row_idx[p]];
            }
            y[j] = s / l.values[start];
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    /// Solves `M x = b`, failing when the residual shows `b` is not in the image.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::IndexMismatch(format!("rhs length {} for dimension {}", b.len(), self.dim())));
        }
        let x = self.solve_unchecked(b);
        let r = self.matrix.mul_vec(&x);
        let res: f64 = r.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        let nb = norm(b);
        if res > IMAGE_TOL * nb {
            return Err(Error::NotInImage(if nb > 0.0 { res / nb } else { res }));
        }
        Ok(x)
    }

    /// `P L Lᵀ Pᵀ` in original indexing.
    pub fn reconstruct(&self) -> SparseMatrix {
        let llt = self.l.matmul(&self.l.transpose());
        let trip: Vec<(usize, usize, f64)> =
            llt.triplets().into_iter().map(|(i, j, v)| (self.perm[i], self.perm[j], v)).collect();
        SparseMatrix::from_triplets(self.dim(), self.dim(), &trip)
    }

    /// Number of columns of `L` with at least one nonzero.
    pub fn nonzero_columns(&self) -> usize {
        (0..self.dim()).filter(|&j| self.l.col(j).any(|(_, v)| v != 0.0)).count()
    }
}

/// Convenience wrapper for a checked solve.
pub fn solve_with_factor(f: &CholeskyFactor, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}
