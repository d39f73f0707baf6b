//! Exact solver for a PSD matrix whose rows split into a sparse block-diagonal part
//! (`C₂`, factored by nested dissection per group) and a small dense part (`C₁`,
//! handled through the pseudoinverse of its Schur complement).

use std::ops::Range;

use rayon::prelude::*;

use super::{block_eliminate, qr};
use crate::complex::Point;
use crate::error::{Error, Result};
use crate::nested_dissection::{nd_factor, CholeskyFactor};
use crate::sparse::{dot, gather, scatter, SparseMatrix};

/// Largest `C₁` accepted for the dense Schur complement.
pub const DENSE_CAP: usize = 5000;

/// Relative rank threshold for the dense Schur complement.
pub const SPLIT_RANK_TOL: f64 = 1e-10;

struct Block {
    range: Range<usize>,
    factor: CholeskyFactor,
}

pub struct SplitSolver {
    dim: usize,
    /// `C₂` rows grouped block by block.
    pub c2: Vec<usize>,
    /// `C₁` rows.
    pub c1: Vec<usize>,
    blocks: Vec<Block>,
    a12: SparseMatrix,
    a21: SparseMatrix,
    sc_pinv: Vec<Vec<f64>>,
    pub schur_rank: usize,
}

impl SplitSolver {
    /// `group[i]` is the block of row `i`, or `None` for rows of `C₁`.
    pub fn new(m: &SparseMatrix, points: &[Point], group: &[Option<usize>]) -> Result<Self> {
        let n = m.nrows;
        if group.len() != n || points.len() != n {
            return Err(Error::IndexMismatch(format!("{} groups and {} points for {n} rows", group.len(), points.len())));
        }
        let c1: Vec<usize> = (0..n).filter(|&i| group[i].is_none()).collect();
        if c1.len() > DENSE_CAP {
            return Err(Error::SizeCap { size: c1.len(), cap: DENSE_CAP });
        }
        let num_groups = group.iter().flatten().max().map_or(0, |g| g + 1);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_groups];
        for (i, g) in group.iter().enumerate() {
            if let Some(g) = g {
                members[*g].push(i);
            }
        }
        let mut c2 = Vec::new();
        let mut ranges = Vec::new();
        for rows in &members {
            ranges.push(c2.len()..c2.len() + rows.len());
            c2.extend_from_slice(rows);
        }
        let blocks = members
            .par_iter()
            .zip(ranges)
            .map(|(rows, range)| {
                let pts: Vec<Point> = rows.iter().map(|&i| points[i]).collect();
                Ok(Block { range, factor: nd_factor(&m.submatrix(rows, rows), &pts, None)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let a12 = m.submatrix(&c2, &c1);
        let mut solver = SplitSolver {
            dim: n,
            a21: a12.transpose(),
            a12,
            c2,
            c1,
            blocks,
            sc_pinv: Vec::new(),
            schur_rank: 0,
        };
        let k = solver.c1.len();
        let a11 = m.submatrix(&solver.c1, &solver.c1);
        let mut sc = vec![vec![0.0; k]; k];
        let cols: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                let x = solver.f_solve(&solver.a12.mul_vec(&e));
                let y = solver.a21.mul_vec(&x);
                (0..k).map(|i| a11.get(i, j) - y[i]).collect()
            })
            .collect();
        for (j, col) in cols.iter().enumerate() {
            for i in 0..k {
                sc[i][j] = col[i];
            }
        }
        for i in 0..k {
            for j in 0..i {
                let a = 0.5 * (sc[i][j] + sc[j][i]);
                sc[i][j] = a;
                sc[j][i] = a;
            }
        }
        let (p, rank) = qr::pinv(&sc, k, SPLIT_RANK_TOL);
        solver.sc_pinv = p;
        solver.schur_rank = rank;
        Ok(solver)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn f_solve(&self, b: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> =
            self.blocks.par_iter().map(|blk| blk.factor.solve_unchecked(&b[blk.range.clone()])).collect();
        parts.concat()
    }

    /// Solves `M x = b` for `b` in the image of `M`. Not residual-checked.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (x2, x1) = block_eliminate(
            &|v| Ok(self.f_solve(v)),
            &|h, _| Ok(self.sc_pinv.iter().map(|row| dot(row, h)).collect()),
            &|v| self.a21.mul_vec(v),
            &|v| self.a12.mul_vec(v),
            &gather(b, &self.c2),
            &gather(b, &self.c1),
            0.0,
        )
        .expect("split solves are infallible");
        let mut x = vec![0.0; self.dim];
        scatter(&x2, &self.c2, &mut x);
        scatter(&x1, &self.c1, &mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{norm, sub};

    #[test]
    fn split_solve_of_path_laplacian() {
        // Two paths joined through a shared middle vertex.
        let n = 9;
        let mut trip = Vec::new();
        for i in 0..n - 1 {
            trip.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let m = SparseMatrix::from_triplets(n, n, &trip);
        let pts: Vec<Point> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        let group: Vec<Option<usize>> = (0..n).map(|i| if i == 4 { None } else { Some(usize::from(i > 4)) }).collect();
        let s = SplitSolver::new(&m, &pts, &group).unwrap();
        assert_eq!(s.c1, vec![4]);
        let b = m.mul_vec(&(0..n).map(|i| (i * i) as f64).collect::<Vec<_>>());
        let x = s.solve(&b);
        assert!(norm(&sub(&m.mul_vec(&x), &b)) <= 1e-12 * norm(&b));
    }
}
