//! Dense reference linear algebra for verification.
//!
//! Everything here goes through a full eigendecomposition or SVD, so it is only
//! meant for desk-scale matrices (see [`SIZE_CAP`]).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub type DenseMatrix = DMatrix<f64>;

/// Largest dimension accepted by the dense routines.
pub const SIZE_CAP: usize = 3000;

/// Relative threshold below which singular values count as zero.
pub const DEFAULT_TOL: f64 = 1e-10;

fn check_cap(m: &DenseMatrix) -> Result<()> {
    let size = m.nrows().max(m.ncols());
    if size > SIZE_CAP {
        return Err(Error::SizeCap { size, cap: SIZE_CAP });
    }
    Ok(())
}

pub fn from_sparse(a: &SparseMatrix) -> DenseMatrix {
    let mut d = DMatrix::zeros(a.nrows, a.ncols);
    for j in 0..a.ncols {
        for (i, v) in a.col(j) {
            d[(i, j)] = v;
        }
    }
    d
}

pub fn from_rows(rows: &[Vec<f64>]) -> DenseMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn is_symmetric(m: &DenseMatrix) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

/// Eigenpairs of a symmetric matrix.
pub fn sym_eigen(m: &DenseMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    check_cap(m)?;
    Ok(SymmetricEigen::new(m.clone()))
}

/// Moore–Penrose pseudoinverse.
pub fn pinv(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    check_cap(m)?;
    if m.is_empty() {
        return Ok(DMatrix::zeros(m.ncols(), m.nrows()));
    }
    if is_symmetric(m) {
        let e = SymmetricEigen::new(m.clone());
        let lmax = e.eigenvalues.amax();
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (k, &l) in e.eigenvalues.iter().enumerate() {
            if l.abs() > tol * lmax {
                let v = e.eigenvectors.column(k);
                out += (v * v.transpose()) / l;
            }
        }
        return Ok(out);
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol * smax {
            out += (vt.row(k).transpose() * u.column(k).transpose()) / s;
        }
    }
    Ok(out)
}

pub fn pinv_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let p = pinv(m, DEFAULT_TOL)?;
    Ok(to_vec(&(p * DVector::from_column_slice(b))))
}

/// Orthonormal basis of the column space.
pub fn image_basis(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    check_cap(m)?;
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    let svd = SVD::new(m.clone(), true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol * smax && smax > 0.0)
        .collect();
    Ok(DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])]))
}

/// Orthogonal projection onto the column space.
pub fn projection(m: &DenseMatrix) -> Result<DenseMatrix> {
    let u = image_basis(m, DEFAULT_TOL)?;
    Ok(&u * u.transpose())
}

pub fn rank(m: &DenseMatrix, tol: f64) -> Result<usize> {
    Ok(image_basis(m, tol)?.ncols())
}

/// Orthonormal basis of the null space.
pub fn kernel_basis(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    check_cap(m)?;
    let n = m.ncols();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // Pad to at least n rows so the SVD returns a complete right basis.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let smax = svd.singular_values.max();
    let vt = svd.v_t.unwrap();
    let zero: Vec<usize> = (0..n)
        .filter(|&k| !(svd.singular_values[k] > tol * smax && smax > 0.0))
        .collect();
    Ok(DMatrix::from_fn(n, zero.len(), |i, j| vt[(zero[j], i)]))
}

/// Dense Schur complement `A[C,C] − A[C,F] A[F,F]† A[F,C]`.
pub fn schur_complement(a: &DenseMatrix, f: &[usize], c: &[usize]) -> Result<DenseMatrix> {
    let pick = |r: &[usize], s: &[usize]| DMatrix::from_fn(r.len(), s.len(), |i, j| a[(r[i], s[j])]);
    let aff = pick(f, f);
    let afc = pick(f, c);
    let acf = pick(c, f);
    let acc = pick(c, c);
    Ok(acc - acf * pinv(&aff, DEFAULT_TOL)? * afc)
}

pub fn mat_vec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    to_vec(&(m * DVector::from_column_slice(x)))
}
