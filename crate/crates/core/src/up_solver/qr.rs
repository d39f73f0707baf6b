//! Dense Householder QR and a pseudoinverse from a complete orthogonal decomposition.

use crate::sparse::{dot, norm};

/// Thin Householder QR of an `m × n` matrix given by rows.
///
/// With `pivot`, columns are chosen by largest remaining norm and the factorization
/// stops once that norm falls to `tol` times the first pivot norm.
struct Qr {
    /// `m × rank` orthonormal columns, stored column by column.
    q: Vec<Vec<f64>>,
    /// `rank × n` upper trapezoidal factor in pivoted column order, stored by rows.
    r: Vec<Vec<f64>>,
    /// `perm[j]` is the original column placed at position `j`.
    perm: Vec<usize>,
}

fn householder_qr(a: &[Vec<f64>], ncols: usize, pivot: bool, tol: f64) -> Qr {
    let m = a.len();
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..ncols).map(|j| a.iter().map(|row| row[j]).collect()).collect();
    let mut perm: Vec<usize> = (0..ncols).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let mut first = 0.0;
    for k in 0..m.min(ncols) {
        if pivot {
            let tail_norm = |c: &Vec<f64>| norm(&c[k..]);
            let best = (k..ncols).max_by(|&i, &j| tail_norm(&cols[i]).total_cmp(&tail_norm(&cols[j]))).unwrap_or(k);
            cols.swap(k, best);
            perm.swap(k, best);
        }
        let alpha = norm(&cols[k][k..]);
        if k == 0 {
            first = alpha;
        }
        if alpha == 0.0 || (pivot && alpha <= tol * first) {
            break;
        }
        let mut v = vec![0.0; m];
        v[k..].copy_from_slice(&cols[k][k..]);
        let beta = if v[k] >= 0.0 { -alpha } else { alpha };
        v[k] -= beta;
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        for c in cols.iter_mut().skip(k) {
            let s = 2.0 * dot(&v[k..], &c[k..]);
            for (ci, vi) in c[k..].iter_mut().zip(&v[k..]) {
                *ci -= s * vi;
            }
        }
        reflectors.push(v);
    }
    let rank = reflectors.len();
    let r = (0..rank).map(|i| (0..ncols).map(|j| if i <= j { cols[j][i] } else { 0.0 }).collect()).collect();
    // Q = H₀ H₁ ⋯ applied to the first `rank` unit vectors.
    let q = (0..rank)
        .map(|j| {
            let mut x = vec![0.0; m];
            x[j] = 1.0;
            for v in reflectors.iter().rev() {
                let s = 2.0 * dot(v, &x);
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi -= s * vi;
                }
            }
            x
        })
        .collect();
    Qr { q, r, perm }
}

/// Pseudoinverse `A⁺` of an `m × n` matrix as `n × m` rows, and the numerical rank.
///
/// Factors `A P = Q R` with column pivoting, then `(R Pᵀ)ᵀ = Z U` without pivoting,
/// so `A = Q Uᵀ Zᵀ` and `A⁺ = Z U⁻ᵀ Qᵀ`.
pub fn pinv(a: &[Vec<f64>], ncols: usize, tol: f64) -> (Vec<Vec<f64>>, usize) {
    let m = a.len();
    let first = householder_qr(a, ncols, true, tol);
    let rank = first.r.len();
    if rank == 0 {
        return (vec![vec![0.0; m]; ncols], 0);
    }
    // Gᵀ = (R Pᵀ)ᵀ as n × rank rows.
    let mut gt = vec![vec![0.0; rank]; ncols];
    for (i, row) in first.r.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            gt[first.perm[j]][i] = v;
        }
    }
    let second = householder_qr(&gt, rank, false, 0.0);
    let u = &second.r;
    let z = &second.q;
    let rank = u.len();
    // Solve Uᵀ Y = Qᵀ column by column, then A⁺ = Z Y.
    let mut out = vec![vec![0.0; m]; ncols];
    for col in 0..m {
        let mut y: Vec<f64> = (0..rank).map(|i| first.q[i][col]).collect();
        for i in 0..rank {
            let s: f64 = (0..i).map(|k| u[k][i] * y[k]).sum();
            y[i] = (y[i] - s) / u[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (row, zk) in out.iter_mut().zip(&z[k]) {
                row[col] += zk * yk;
            }
        }
    }
    (out, rank)
}
