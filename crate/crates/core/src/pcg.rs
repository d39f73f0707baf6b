//! Preconditioned conjugate gradient over abstract operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nested_dissection::CholeskyFactor;
use crate::sparse::{axpy, dot, norm, SparseMatrix};

/// A linear map on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Applies the factored pseudoinverse.
impl LinearOperator for CholeskyFactor {
    fn dim(&self) -> usize {
        CholeskyFactor::dim(self)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve_unchecked(x));
    }
}

pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Inverse of the diagonal, with zero entries mapped to zero.
pub struct Jacobi {
    inv: Vec<f64>,
}

impl Jacobi {
    pub fn new(m: &SparseMatrix) -> Self {
        let inv = m.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 }).collect();
        Self { inv }
    }
}

impl LinearOperator for Jacobi {
    fn dim(&self) -> usize {
        self.inv.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.inv) {
            *yi = xi * d;
        }
    }
}

/// Operator defined by a closure.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// True relative residual `‖Ax − b‖ / ‖b‖` of the returned iterate.
    pub relative_residual: f64,
    /// Relative residual after each iteration, as tracked by the recurrence.
    pub residual_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_iters: Option<usize>,
    pub check_symmetry: bool,
}

impl PcgOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_iters: None, check_symmetry: true }
    }

    pub fn max_iters(mut self, k: usize) -> Self {
        self.max_iters = Some(k);
        self
    }
}

/// Interval between recomputations of the true residual.
pub const RESIDUAL_REFRESH: usize = 16;

pub const SYMMETRY_TOL: f64 = 1e-8;

pub fn default_max_iters(dim: usize) -> usize {
    (20.0 * (dim as f64).sqrt()).ceil() as usize + 200
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Checks `⟨Ax, y⟩ = ⟨x, Ay⟩` on a random pair.
pub fn check_symmetric(a: &dyn LinearOperator, seed: u64) -> Result<()> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_vector(n, &mut rng);
    let y = random_vector(n, &mut rng);
    let ax = a.apply(&x);
    let ay = a.apply(&y);
    let lhs = dot(&ax, &y);
    let rhs = dot(&x, &ay);
    let scale = norm(&ax) * norm(&y) + norm(&x) * norm(&ay);
    if (lhs - rhs).abs() > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(format!("<Ax,y> = {lhs:.6e} but <x,Ay> = {rhs:.6e}")));
    }
    Ok(())
}

fn true_residual(a: &dyn LinearOperator, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.apply_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Solves `A x = b` with preconditioner pseudoinverse `m`.
///
/// Stops once the true relative residual is at most `opts.tol`. Reaching the
/// iteration limit returns the last iterate with `converged = false`.
pub fn pcg(a: &dyn LinearOperator, m: &dyn LinearOperator, b: &[f64], opts: PcgOptions) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if m.dim() != n || b.len() != n {
        return Err(Error::IndexMismatch(format!("operator {n}, preconditioner {}, rhs {}", m.dim(), b.len())));
    }
    if opts.check_symmetry {
        check_symmetric(a, 0x5eed)?;
    }
    let max_iters = opts.max_iters.unwrap_or_else(|| default_max_iters(n));
    let nb = norm(b);
    let mut x = vec![0.0; n];
    let mut report = SolveReport::default();
    if nb == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let target = opts.tol * nb;
    let mut r = b.to_vec();
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut since_refresh = 0;
    loop {
        let rn = norm(&r);
        if rn <= target || since_refresh >= RESIDUAL_REFRESH {
            true_residual(a, &x, b, &mut r);
            since_refresh = 0;
            let tn = norm(&r);
            if tn <= target {
                report.converged = true;
                report.relative_residual = tn / nb;
                return Ok((x, report));
            }
            m.apply_into(&r, &mut z);
            rz = dot(&r, &z);
        }
        if report.iterations >= max_iters {
            true_residual(a, &x, b, &mut r);
            report.relative_residual = norm(&r) / nb;
            return Ok((x, report));
        }
        if rz <= 0.0 {
            return Err(Error::NotPsd(format!("preconditioned residual norm {rz:.3e} at iteration {}", report.iterations)));
        }
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPsd(format!("p·Ap = {pap:.3e} at iteration {}", report.iterations)));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        m.apply_into(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        report.iterations += 1;
        since_refresh += 1;
        report.residual_trace.push(norm(&r) / nb);
    }
}

/// Like [`pcg`] but reports an unconverged solve as an error.
pub fn pcg_checked(a: &dyn LinearOperator, m: &dyn LinearOperator, b: &[f64], opts: PcgOptions) -> Result<(Vec<f64>, SolveReport)> {
    let (x, rep) = pcg(a, m, b, opts)?;
    if !rep.converged {
        return Err(Error::NotConverged(format!(
            "{} iterations, relative residual {:.3e} > {:.3e}",
            rep.iterations, rep.relative_residual, opts.tol
        )));
    }
    Ok((x, rep))
}

/// Extreme eigenvalues of `B⁺A` on the common image, by preconditioned Lanczos.
///
/// `b_pinv` applies the pseudoinverse of `B`. The start vector is `A` applied to a
/// seeded random vector, so kernel directions of `A` are excluded.
pub fn lanczos_extremes(a: &dyn LinearOperator, b_pinv: &dyn LinearOperator, iters: usize, seed: u64) -> (f64, f64) {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = a.apply(&random_vector(n, &mut rng));
    let mut z = b_pinv.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let rz0 = rz;
    let mut ap = vec![0.0; n];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    for _ in 0..iters.max(1) {
        if !(rz > 1e-28 * rz0) {
            break;
        }
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        axpy(-alpha, &ap, &mut r);
        b_pinv.apply_into(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        alphas.push(alpha);
        betas.push(beta);
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let k = alphas.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j] + if j > 0 { betas[j - 1] / alphas[j - 1] } else { 0.0 };
        if j + 1 < k {
            let off = betas[j].max(0.0).sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let e = SymmetricEigen::new(t).eigenvalues;
    (e.min(), e.max())
}

/// Lanczos estimate of the relative condition number `κ(A, B)`.
pub fn estimate_rel_condition(a: &dyn LinearOperator, b_pinv: &dyn LinearOperator, iters: usize) -> f64 {
    let (lo, hi) = lanczos_extremes(a, b_pinv, iters, 0xc0ffee);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Upper bound on the spectral norm of a symmetric matrix (largest absolute row sum).
pub fn norm_upper_bound(m: &SparseMatrix) -> f64 {
    let mut sums = vec![0.0f64; m.nrows];
    for j in 0..m.ncols {
        for (i, v) in m.col(j) {
            sums[i] += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn diagonal_two_iterations() {
        let a = SparseMatrix::from_diagonal(&[1.0, 4.0]);
        let (x, rep) = pcg(&a, &Identity(2), &[1.0, 2.0], PcgOptions::new(1e-12)).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        let a = SparseMatrix::from_diagonal(&[1.0, 4.0, 9.0]);
        let (_, rep) = pcg(&a, &Jacobi::new(&a), &[1.0, 1.0, 1.0], PcgOptions::new(1e-12)).unwrap();
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn path_laplacian_terminates() {
        let n = 16;
        let a = path_laplacian(n);
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 7.5).collect();
        let (x, rep) = pcg(&a, &Identity(n), &b, PcgOptions::new(1e-8)).unwrap();
        assert!(rep.converged && rep.iterations <= 16, "{rep:?}");
        let r = crate::sparse::sub(&a.mul_vec(&x), &b);
        assert!(norm(&r) <= 1e-8 * norm(&b));
    }

    #[test]
    fn asymmetric_operator_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        assert!(matches!(pcg(&a, &Identity(2), &[1.0, 1.0], PcgOptions::new(1e-8)), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn indefinite_breaks_down() {
        let a = SparseMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(pcg(&a, &Identity(2), &[0.0, 1.0], PcgOptions::new(1e-8)), Err(Error::NotPsd(_))));
    }

    #[test]
    fn condition_estimates() {
        let b = path_laplacian(12).add(&SparseMatrix::identity(12));
        let f = crate::nested_dissection::cholesky(&b, &(0..12).collect::<Vec<_>>(), 1e-12).unwrap();
        assert!((estimate_rel_condition(&b, &f, 30) - 1.0).abs() < 0.05);
        assert!((estimate_rel_condition(&b.scale(2.0), &f, 30) - 1.0).abs() < 0.05);
        let d = SparseMatrix::from_diagonal(&[1.0, 10.0]);
        assert!((estimate_rel_condition(&d, &Identity(2), 10) - 10.0).abs() < 0.5);
    }
}
