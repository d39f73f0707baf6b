//! Up-Laplacian solver: exact elimination of region interiors, PCG on the Schur
//! complement over the hollowing boundary.

mod qr;
mod split;
mod surface;

use std::cell::RefCell;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{up_laplacian, Complex3};
use crate::error::{Error, Result};
use crate::hollowing::{Hollowing, HollowingKind};
use crate::nested_dissection::{nd_factor, CholeskyFactor};
use crate::pcg::{lanczos_extremes, pcg_checked, LinearOperator, PcgOptions, SolveReport};
use crate::sparse::{gather, norm, scatter, sub, SparseMatrix};

pub use qr::pinv as qr_pinv;
pub use split::{SplitSolver, DENSE_CAP};
pub use surface::{SurfaceSolver, SurfaceStats};

/// Tunable constants of the up-Laplacian solver.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UpSolverConfig {
    /// Relative residual accepted from an interior solve.
    pub f_tol: f64,
    /// PCG iteration ceiling is `iter_factor · √r · ln(1/δ)`.
    pub iter_factor: f64,
    /// Power iterations for the coupling norm estimate.
    pub power_iters: usize,
    /// Factor applied to the coupling norm estimate.
    pub norm_safety: f64,
}

impl Default for UpSolverConfig {
    fn default() -> Self {
        Self { f_tol: 1e-8, iter_factor: 20.0, power_iters: 30, norm_safety: 2.0 }
    }
}

/// Solver for the boundary preconditioner `L₁ᵘᵖ` of the hollowing complex `T`.
pub enum Preconditioner {
    /// Nested dissection factor of `L₁ᵘᵖ_T`.
    Factor(CholeskyFactor),
    /// Surface reduction for sphere hollowings.
    Surface(SurfaceSolver),
    /// Per-group factors plus a dense Schur complement on shared edges.
    Split(SplitSolver),
}

impl LinearOperator for Preconditioner {
    fn dim(&self) -> usize {
        match self {
            Preconditioner::Factor(f) => f.dim(),
            Preconditioner::Surface(s) => s.dim(),
            Preconditioner::Split(s) => s.dim(),
        }
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Preconditioner::Factor(f) => y.copy_from_slice(&f.solve_unchecked(x)),
            Preconditioner::Surface(s) => y.copy_from_slice(&s.solve(x)),
            Preconditioner::Split(s) => y.copy_from_slice(&s.solve(x)),
        }
    }
}

struct RegionBlock {
    range: Range<usize>,
    factor: CholeskyFactor,
}

/// Preprocessed solver for `L₁ᵘᵖ x = b` on one complex and hollowing.
pub struct UpSolverState {
    pub r: f64,
    pub num_edges: usize,
    /// Interior edges, grouped by region.
    pub f_edges: Vec<usize>,
    /// Region of each entry of `f_edges`.
    pub f_region: Vec<usize>,
    /// Boundary edges.
    pub c_edges: Vec<usize>,
    /// Boundary triangles (the complex `T`).
    pub t_triangles: Vec<usize>,
    pub l: SparseMatrix,
    pub l_cc: SparseMatrix,
    pub l_cf: SparseMatrix,
    pub l_fc: SparseMatrix,
    /// `L₁ᵘᵖ` of `T` on the boundary edges.
    pub l_t: SparseMatrix,
    pub precond: Preconditioner,
    /// Estimate of `‖L[C,F] L[F,F]⁺‖₂`, safety factor included.
    pub coupling_norm: f64,
    pub config: UpSolverConfig,
    blocks: Vec<RegionBlock>,
}

/// Outcome of an up-Laplacian solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct UpSolveReport {
    pub delta: f64,
    pub coupling_norm: f64,
    pub pcg: SolveReport,
    pub relative_residual: f64,
}

/// `∂₂[C, T]` for triangles `t` whose edges all lie in `c` (given by `c_pos`).
pub(crate) fn boundary_block(c: &Complex3, c_pos: &[usize], c_len: usize, t: &[usize]) -> SparseMatrix {
    let mut trip = Vec::with_capacity(3 * t.len());
    for (k, &f) in t.iter().enumerate() {
        for (j, &e) in c.triangle_edges[f].iter().enumerate() {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            trip.push((c_pos[e], k, s));
        }
    }
    SparseMatrix::from_triplets(c_len, t.len(), &trip)
}

fn positions(n: usize, idx: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in idx.iter().enumerate() {
        pos[i] = k;
    }
    pos
}

/// Builds the solver with a nested dissection factor of `L₁ᵘᵖ_T` as preconditioner.
pub fn build_up_solver(c: &Complex3, h: &Hollowing) -> Result<UpSolverState> {
    build(c, h, UpSolverConfig::default(), |c, _h, c_edges, _t, l_t| {
        let pts: Vec<_> = c_edges.iter().map(|&e| c.edge_midpoint(e)).collect();
        Ok(Preconditioner::Factor(nd_factor(l_t, &pts, None)?))
    })
}

/// Builds the solver with the surface reduction as preconditioner; `h` must be a sphere hollowing.
pub fn build_sphere_fast_solver(c: &Complex3, h: &Hollowing) -> Result<UpSolverState> {
    if h.kind != HollowingKind::Sphere {
        return Err(Error::InvalidInput("the fast solver needs a sphere hollowing".into()));
    }
    build(c, h, UpSolverConfig::default(), |c, h, c_edges, t, _l_t| {
        Ok(Preconditioner::Surface(SurfaceSolver::new(c, h, c_edges, t)?))
    })
}

/// Builds the solver with a split preconditioner. `edge_group[e]` is the group of a
/// boundary edge `e` whose rows are factored together, or `None` for the dense part.
pub fn build_split_solver(c: &Complex3, h: &Hollowing, edge_group: &[Option<usize>]) -> Result<UpSolverState> {
    if edge_group.len() != c.num_edges() {
        return Err(Error::IndexMismatch(format!("{} edge groups for {} edges", edge_group.len(), c.num_edges())));
    }
    build(c, h, UpSolverConfig::default(), |c, _h, c_edges, _t, l_t| {
        let pts: Vec<_> = c_edges.iter().map(|&e| c.edge_midpoint(e)).collect();
        let group: Vec<Option<usize>> = c_edges.iter().map(|&e| edge_group[e]).collect();
        Ok(Preconditioner::Split(SplitSolver::new(l_t, &pts, &group)?))
    })
}

fn build<P>(c: &Complex3, h: &Hollowing, config: UpSolverConfig, precond: P) -> Result<UpSolverState>
where
    P: FnOnce(&Complex3, &Hollowing, &[usize], &[usize], &SparseMatrix) -> Result<Preconditioner>,
{
    h.check_matches(c)?;
    let l = up_laplacian(c, 1)?;
    let regions = h.region_edges();
    let mut f_edges = Vec::new();
    let mut f_region = Vec::new();
    let mut ranges = Vec::new();
    for (i, edges) in regions.iter().enumerate() {
        ranges.push(f_edges.len()..f_edges.len() + edges.len());
        f_edges.extend_from_slice(edges);
        f_region.extend(std::iter::repeat_n(i, edges.len()));
    }
    let blocks = regions
        .par_iter()
        .zip(ranges)
        .map(|(edges, range)| {
            let sub = l.submatrix(edges, edges);
            let pts: Vec<_> = edges.iter().map(|&e| c.edge_midpoint(e)).collect();
            let root: Vec<usize> = (0..edges.len()).filter(|&k| c.exterior_edge[edges[k]]).collect();
            Ok(RegionBlock { range, factor: nd_factor(&sub, &pts, Some(&root))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_edges = h.boundary_edges();
    let t_triangles = h.boundary_triangles();
    let c_pos = positions(c.num_edges(), &c_edges);
    let w_t: Vec<f64> = t_triangles.iter().map(|&f| c.weights.w2[f]).collect();
    let l_t = boundary_block(c, &c_pos, c_edges.len(), &t_triangles).gram(&w_t);
    let l_cf = l.submatrix(&c_edges, &f_edges);
    let precond = precond(c, h, &c_edges, &t_triangles, &l_t)?;
    let mut state = UpSolverState {
        r: h.r,
        num_edges: c.num_edges(),
        l_cc: l.submatrix(&c_edges, &c_edges),
        l_fc: l_cf.transpose(),
        l_cf,
        l,
        f_edges,
        f_region,
        c_edges,
        t_triangles,
        l_t,
        precond,
        coupling_norm: 0.0,
        config,
        blocks,
    };
    state.coupling_norm = config.norm_safety * state.estimate_coupling_norm(config.power_iters);
    Ok(state)
}

impl UpSolverState {
    pub fn num_regions(&self) -> usize {
        self.blocks.len()
    }

    /// Interior solve, block by block, without a residual check.
    fn f_solve_unchecked(&self, b_f: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> =
            self.blocks.par_iter().map(|blk| blk.factor.solve_unchecked(&b_f[blk.range.clone()])).collect();
        parts.concat()
    }

    fn f_apply(&self, x_f: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> =
            self.blocks.par_iter().map(|blk| blk.factor.matrix().mul_vec(&x_f[blk.range.clone()])).collect();
        parts.concat()
    }

    /// Solves `L[F,F] x = b_F` exactly, checking that `b_F` is in the image.
    pub fn uplap_f_solve(&self, b_f: &[f64]) -> Result<Vec<f64>> {
        if b_f.len() != self.f_edges.len() {
            return Err(Error::IndexMismatch(format!("interior rhs length {} != {}", b_f.len(), self.f_edges.len())));
        }
        let x = self.f_solve_unchecked(b_f);
        let (res, nb) = (norm(&sub(&self.f_apply(&x), b_f)), norm(b_f));
        if res > self.config.f_tol * nb {
            return Err(Error::NotInImage(if nb > 0.0 { res / nb } else { res }));
        }
        Ok(x)
    }

    /// `Sc[L]_C x_C = L[C,C] x_C − L[C,F] L[F,F]⁺ L[F,C] x_C`.
    pub fn schur_apply(&self, x_c: &[f64]) -> Vec<f64> {
        let y = self.f_solve_unchecked(&self.l_fc.mul_vec(x_c));
        sub(&self.l_cc.mul_vec(x_c), &self.l_cf.mul_vec(&y))
    }

    pub fn schur_operator(&self) -> SchurOperator<'_> {
        SchurOperator(self)
    }

    /// PCG iteration ceiling for target `delta`.
    pub fn iteration_ceiling(&self, delta: f64) -> usize {
        let k = self.config.iter_factor * self.r.max(1.0).sqrt() * (1.0 / delta).ln().max(1.0);
        k.ceil() as usize
    }

    /// Solves `Sc[L]_C x = h` to relative residual `delta` by PCG preconditioned with `L₁ᵘᵖ_T`.
    pub fn schur_solve(&self, h: &[f64], delta: f64) -> Result<(Vec<f64>, SolveReport)> {
        if h.len() != self.c_edges.len() {
            return Err(Error::IndexMismatch(format!("boundary rhs length {} != {}", h.len(), self.c_edges.len())));
        }
        if h.is_empty() {
            return Ok((Vec::new(), SolveReport { converged: true, ..Default::default() }));
        }
        let opts = PcgOptions::new(delta).max_iters(self.iteration_ceiling(delta));
        pcg_checked(&self.schur_operator(), &self.precond, h, opts)
    }

    /// Solves `L₁ᵘᵖ x = b` to relative residual `eps`.
    pub fn solve(&self, b: &[f64], eps: f64) -> Result<(Vec<f64>, UpSolveReport)> {
        if b.len() != self.num_edges {
            return Err(Error::IndexMismatch(format!("rhs length {} != {} edges", b.len(), self.num_edges)));
        }
        let delta = eps / (1.0 + self.coupling_norm);
        let mut report = UpSolveReport { delta, coupling_norm: self.coupling_norm, ..Default::default() };
        let nb = norm(b);
        if nb == 0.0 {
            report.pcg.converged = true;
            return Ok((vec![0.0; self.num_edges], report));
        }
        let pcg_report = RefCell::new(SolveReport::default());
        let (x_f, x_c) = block_eliminate(
            &|v| self.uplap_f_solve(v),
            &|h, d| {
                let (x, rep) = self.schur_solve(h, d)?;
                *pcg_report.borrow_mut() = rep;
                Ok(x)
            },
            &|v| self.l_cf.mul_vec(v),
            &|v| self.l_fc.mul_vec(v),
            &gather(b, &self.f_edges),
            &gather(b, &self.c_edges),
            delta,
        )?;
        let mut x = vec![0.0; self.num_edges];
        scatter(&x_f, &self.f_edges, &mut x);
        scatter(&x_c, &self.c_edges, &mut x);
        let rel = norm(&sub(&self.l.mul_vec(&x), b)) / nb;
        report.pcg = pcg_report.into_inner();
        report.relative_residual = rel;
        if rel > eps {
            return Err(Error::NotInImage(rel));
        }
        Ok((x, report))
    }

    /// Extreme eigenvalues of `L_T⁺ Sc[L]_C` on the common image, by Lanczos.
    pub fn relative_spectrum(&self, iters: usize) -> (f64, f64) {
        if self.c_edges.is_empty() {
            return (1.0, 1.0);
        }
        lanczos_extremes(&self.schur_operator(), &self.precond, iters, 0x5c4)
    }

    /// Power iteration for `‖L[C,F] L[F,F]⁺‖₂` through `A Aᵀ` with `A = L[C,F] L[F,F]⁺`.
    fn estimate_coupling_norm(&self, iters: usize) -> f64 {
        let n = self.c_edges.len();
        if n == 0 || self.f_edges.is_empty() {
            return 0.0;
        }
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let mut est = 0.0;
        for _ in 0..iters {
            let ny = norm(&y);
            if ny == 0.0 {
                return 0.0;
            }
            y.iter_mut().for_each(|v| *v /= ny);
            let z = self.f_solve_unchecked(&self.l_fc.mul_vec(&y));
            // ‖Aᵀ y‖ = ‖z‖ for the unit vector y; the update is A Aᵀ y.
            est = norm(&z);
            y = self.l_cf.mul_vec(&self.f_solve_unchecked(&z));
        }
        est
    }
}

/// The implicit Schur complement as a linear operator on the boundary edges.
pub struct SchurOperator<'a>(&'a UpSolverState);

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.0.c_edges.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.0.schur_apply(x));
    }
}

/// Block Gaussian elimination with an inexact Schur complement solve.
///
/// Computes `h = b_C − A[C,F] A[F,F]⁺ b_F`, `x_C = Sc⁺ h` (to accuracy `delta`) and
/// `x_F = A[F,F]⁺ (b_F − A[F,C] x_C)`.
#[allow(clippy::type_complexity)]
pub fn block_eliminate(
    f_solve: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    schur_solve: &dyn Fn(&[f64], f64) -> Result<Vec<f64>>,
    a_cf: &dyn Fn(&[f64]) -> Vec<f64>,
    a_fc: &dyn Fn(&[f64]) -> Vec<f64>,
    b_f: &[f64],
    b_c: &[f64],
    delta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let y_f = f_solve(b_f)?;
    let h = sub(b_c, &a_cf(&y_f));
    let x_c = schur_solve(&h, delta)?;
    let x_f = f_solve(&sub(b_f, &a_fc(&x_c)))?;
    Ok((x_f, x_c))
}

/// Builds the solver and solves `L₁ᵘᵖ x = b` to relative residual `eps`.
pub fn up_lap_solve(c: &Complex3, h: &Hollowing, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    Ok(build_up_solver(c, h)?.solve(b, eps)?.0)
}

/// Like [`up_lap_solve`] with the surface preconditioner of a sphere hollowing.
pub fn up_lap_solve_fast(c: &Complex3, h: &Hollowing, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    Ok(build_sphere_fast_solver(c, h)?.solve(b, eps)?.0)
}
