//! Solvers for 1-Laplacian systems on well-shaped 3D simplicial complexes.

// Index loops mirror the matrix notation; `!(x > y)` guards also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod down_solver;
pub mod error;
pub mod hollowing;
pub mod mesh_gen;
pub mod nested_dissection;
pub mod one_lap;
pub mod oracle;
pub mod pcg;
pub mod sparse;
pub mod up_projection;
pub mod up_solver;

pub use complex::{build_complex, Complex3, Point, Weights};
pub use error::{Error, Result};
pub use sparse::SparseMatrix;
