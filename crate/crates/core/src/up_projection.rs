//! Approximate orthogonal projection onto `Im(L₁ᵘᵖ) = Im(∂₂)`.
//!
//! Triangles split into interior (`F`) and boundary (`C`) by the hollowing. Then
//! `Π₁ᵘᵖ = Π_Im(∂₂[:,F]) + Π_Ker(∂₂ᵀ[F,:]) ∂₂[:,C] Sc⁺ ∂₂ᵀ[C,:] Π_Ker(∂₂ᵀ[F,:])`
//! with `Sc = Sc[L₂ᵈᵒʷⁿ]_C`, applied with an exact interior factor and PCG on `Sc`.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{boundary_operator, Complex3};
use crate::down_solver::DownSolver;
use crate::error::{Error, Result};
use crate::hollowing::Hollowing;
use crate::nested_dissection::{nd_factor, CholeskyFactor};
use crate::pcg::{lanczos_extremes, norm_upper_bound, pcg_checked, LinearOperator, PcgOptions, SolveReport};
use crate::sparse::{add, norm, sub, SparseMatrix};

/// Power iterations for the `‖L₁ᵘᵖ‖` estimate.
pub const POWER_ITERS: usize = 30;
/// Safety factor on the `‖L₁ᵘᵖ‖` estimate.
pub const NORM_SAFETY: f64 = 2.0;

struct Block {
    range: Range<usize>,
    factor: CholeskyFactor,
}

/// Preprocessed up-projection for one complex and hollowing.
pub struct UpProjectionState {
    pub num_edges: usize,
    /// Interior triangles, grouped by edge-connected component.
    pub f_triangles: Vec<usize>,
    /// Boundary triangles.
    pub c_triangles: Vec<usize>,
    /// `∂₂[:,F]` and `∂₂[:,C]`.
    pub d2_f: SparseMatrix,
    pub d2_c: SparseMatrix,
    d2_ft: SparseMatrix,
    d2_ct: SparseMatrix,
    blocks: Vec<Block>,
    /// Factor of `∂₂ᵀ[C,:] ∂₂[:,C]`.
    pub precond: CholeskyFactor,
    /// Estimate of `‖∂₂ ∂₂ᵀ‖₂`, safety factor included.
    pub up_norm: f64,
    /// Upper bound on `‖∂₂[:,C]‖₂`.
    d2_c_norm: f64,
}

/// Outcome of an up-projection.
#[derive(Clone, Debug, Default, Serialize)]
pub struct UpProjectionReport {
    pub delta: f64,
    pub up_norm: f64,
    pub pcg: SolveReport,
}

/// Groups `f` into components connected through shared edges.
fn edge_components(c: &Complex3, f: &[usize]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..f.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut first = vec![usize::MAX; c.num_edges()];
    for (k, &t) in f.iter().enumerate() {
        for &e in &c.triangle_edges[t] {
            if first[e] == usize::MAX {
                first[e] = k;
            } else {
                let (a, b) = (find(&mut parent, first[e]), find(&mut parent, k));
                parent[a] = b;
            }
        }
    }
    let mut comp_of = vec![usize::MAX; f.len()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for k in 0..f.len() {
        let root = find(&mut parent, k);
        if comp_of[root] == usize::MAX {
            comp_of[root] = comps.len();
            comps.push(Vec::new());
        }
        comps[comp_of[root]].push(f[k]);
    }
    comps
}

/// Builds the projection state from the triangle split of `h`.
pub fn build_up_projection(c: &Complex3, h: &Hollowing) -> Result<UpProjectionState> {
    h.check_matches(c)?;
    let d2 = boundary_operator(c, 2)?.to_f64();
    let all_edges: Vec<usize> = (0..c.num_edges()).collect();
    let comps = edge_components(c, &h.interior_triangles());
    let mut f_triangles = Vec::new();
    let mut ranges = Vec::new();
    for comp in &comps {
        ranges.push(f_triangles.len()..f_triangles.len() + comp.len());
        f_triangles.extend_from_slice(comp);
    }
    let blocks = comps
        .par_iter()
        .zip(ranges)
        .map(|(tris, range)| {
            let df = d2.submatrix(&all_edges, tris);
            let m = df.transpose().gram(&vec![1.0; c.num_edges()]);
            let pts: Vec<_> = tris.iter().map(|&t| c.triangle_centroid(t)).collect();
            let root: Vec<usize> = (0..tris.len()).filter(|&k| c.exterior_triangle[tris[k]]).collect();
            Ok(Block { range, factor: nd_factor(&m, &pts, Some(&root))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_triangles = h.boundary_triangles();
    let d2_f = d2.submatrix(&all_edges, &f_triangles);
    let d2_c = d2.submatrix(&all_edges, &c_triangles);
    let d2_ct = d2_c.transpose();
    let m_c = d2_ct.gram(&vec![1.0; c.num_edges()]);
    let pts: Vec<_> = c_triangles.iter().map(|&t| c.triangle_centroid(t)).collect();
    let precond = nd_factor(&m_c, &pts, None)?;
    let mut state = UpProjectionState {
        num_edges: c.num_edges(),
        f_triangles,
        c_triangles,
        d2_ft: d2_f.transpose(),
        d2_f,
        d2_c,
        d2_ct,
        blocks,
        precond,
        up_norm: 0.0,
        d2_c_norm: norm_upper_bound(&m_c).sqrt(),
    };
    state.up_norm = NORM_SAFETY * state.estimate_up_norm(&d2);
    Ok(state)
}

impl UpProjectionState {
    fn f_solve(&self, b: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> =
            self.blocks.par_iter().map(|blk| blk.factor.solve_unchecked(&b[blk.range.clone()])).collect();
        parts.concat()
    }

    /// `Π_Im(∂₂[:,F]) b = ∂₂[:,F] L₂ᵈᵒʷⁿ[F,F]⁺ ∂₂ᵀ[F,:] b`.
    pub fn proj_im_f(&self, b: &[f64]) -> Vec<f64> {
        if self.f_triangles.is_empty() {
            return vec![0.0; b.len()];
        }
        self.d2_f.mul_vec(&self.f_solve(&self.d2_ft.mul_vec(b)))
    }

    /// `Π_Ker(∂₂ᵀ[F,:]) b = b − Π_Im(∂₂[:,F]) b`.
    pub fn proj_ker_f(&self, b: &[f64]) -> Vec<f64> {
        sub(b, &self.proj_im_f(b))
    }

    /// `Sc[L₂ᵈᵒʷⁿ]_C x = ∂₂ᵀ[C,:] Π_Ker(∂₂ᵀ[F,:]) ∂₂[:,C] x`.
    pub fn schur_apply(&self, x: &[f64]) -> Vec<f64> {
        self.d2_ct.mul_vec(&self.proj_ker_f(&self.d2_c.mul_vec(x)))
    }

    pub fn schur_operator(&self) -> Down2Schur<'_> {
        Down2Schur(self)
    }

    /// Solves `Sc[L₂ᵈᵒʷⁿ]_C x = h` to relative residual `delta`, preconditioned by `∂₂ᵀ[C,:]∂₂[:,C]`.
    pub fn down2_schur_solve(&self, h: &[f64], delta: f64) -> Result<(Vec<f64>, SolveReport)> {
        if h.len() != self.c_triangles.len() {
            return Err(Error::IndexMismatch(format!("rhs length {} != {}", h.len(), self.c_triangles.len())));
        }
        if h.is_empty() {
            return Ok((Vec::new(), SolveReport { converged: true, ..Default::default() }));
        }
        pcg_checked(&self.schur_operator(), &self.precond, h, PcgOptions::new(delta))
    }

    /// Approximates `Π₁ᵘᵖ b` within relative error `eps`; the result lies in `Im(∂₂)`.
    pub fn project(&self, b: &[f64], eps: f64) -> Result<(Vec<f64>, UpProjectionReport)> {
        if b.len() != self.num_edges {
            return Err(Error::IndexMismatch(format!("vector of length {}, expected {}", b.len(), self.num_edges)));
        }
        let delta = eps / self.up_norm.max(1.0);
        let mut report = UpProjectionReport { delta, up_norm: self.up_norm, ..Default::default() };
        let b1 = self.proj_im_f(b);
        let k = sub(b, &b1);
        let b2 = self.d2_ct.mul_vec(&k);
        // At rounding level b₂ carries no recoverable boundary part.
        if norm(&b2) <= 64.0 * f64::EPSILON * self.d2_c_norm * norm(b) {
            report.pcg.converged = true;
            return Ok((b1, report));
        }
        let (b3, rep) = self.down2_schur_solve(&b2, delta)?;
        report.pcg = rep;
        let b4 = self.proj_ker_f(&self.d2_c.mul_vec(&b3));
        Ok((add(&b1, &b4), report))
    }

    /// Extreme eigenvalues of `(∂₂ᵀ[C,:]∂₂[:,C])⁺ Sc[L₂ᵈᵒʷⁿ]_C` on the common image.
    pub fn relative_spectrum(&self, iters: usize) -> (f64, f64) {
        if self.c_triangles.is_empty() {
            return (1.0, 1.0);
        }
        lanczos_extremes(&self.schur_operator(), &self.precond, iters, 0x7a1)
    }

    fn estimate_up_norm(&self, d2: &SparseMatrix) -> f64 {
        let d2t = d2.transpose();
        let mut x: Vec<f64> = (0..self.num_edges).map(|i| 1.0 + ((i * 104_729) % 17) as f64 / 17.0).collect();
        let mut est = 0.0;
        for _ in 0..POWER_ITERS {
            let nx = norm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = d2t.mul_vec(&x);
            // xᵀ ∂₂∂₂ᵀ x = ‖∂₂ᵀ x‖² for the unit vector x.
            est = norm(&y).powi(2);
            x = d2.mul_vec(&y);
        }
        est
    }
}

/// The implicit Schur complement `Sc[L₂ᵈᵒʷⁿ]_C` as a linear operator.
pub struct Down2Schur<'a>(&'a UpProjectionState);

impl LinearOperator for Down2Schur<'_> {
    fn dim(&self) -> usize {
        self.0.c_triangles.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.0.schur_apply(x));
    }
}

/// Builds the state and approximates `Π₁ᵘᵖ b` within relative error `eps`.
pub fn up_project(c: &Complex3, h: &Hollowing, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    Ok(build_up_projection(c, h)?.project(b, eps)?.0)
}

/// `Π₁ᵘᵖ b` as `b − Π₁ᵈᵒʷⁿ b`, valid only when the first Betti number is zero.
///
/// The down-projection runs once at `eps`, then again at a tolerance scaled by the
/// observed ratio `‖b − p‖ / ‖p‖` so the error is relative to the up part.
pub fn up_project_betti0(c: &Complex3, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    let ds = DownSolver::new(c);
    let (p, _) = ds.down_projection(b, eps)?;
    let (np, nu) = (norm(&p), norm(&sub(b, &p)));
    if np == 0.0 || nu >= np {
        return Ok(sub(b, &p));
    }
    let (p, _) = ds.down_projection(b, 0.5 * eps * nu / np)?;
    Ok(sub(b, &p))
}
