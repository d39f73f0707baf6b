//! Geometric nested dissection and sparse Cholesky.

pub mod cholesky;
pub mod ordering;
pub mod separator;

pub use cholesky::{cholesky, numeric, solve_with_factor, symbolic, CholeskyFactor, Symbolic, IMAGE_TOL, PIVOT_TOL};
pub use ordering::{inverse_permutation, nd_ordering, nd_ordering_default};
pub use separator::{edge_separator, triangle_separator, vertex_separator, Separator, SimplexSplit, BALANCE, BASE_CASE};

use crate::complex::Point;
use crate::error::Result;
use crate::sparse::SparseMatrix;

/// Factors a symmetric PSD matrix using a nested dissection ordering of its graph.
///
/// `points[i]` is the location attached to row `i`; `root` rows are eliminated last.
pub fn nd_factor(m: &SparseMatrix, points: &[Point], root: Option<&[usize]>) -> Result<CholeskyFactor> {
    let perm = nd_ordering(points, &m.adjacency(), BASE_CASE, root);
    cholesky(m, &perm, PIVOT_TOL)
}
