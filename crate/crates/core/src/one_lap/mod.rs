//! Full 1-Laplacian solver, Hodge decomposition and Betti numbers.
//!
//! `L₁ = L₁ᵈᵒʷⁿ + L₁ᵘᵖ` with orthogonal images, so `L₁x = Π₁b` splits into an
//! exact down solve and an approximate up solve, each on its own projected part of
//! `b`, recombined through the two projections.

mod union;

use serde::Serialize;

use crate::complex::{boundary_operator, one_laplacian, Complex3};
use crate::down_solver::{DownSolver, ProjectionReport};
use crate::error::{Error, Result};
use crate::hollowing::{Hollowing, HollowingKind};
use crate::oracle;
use crate::pcg::{lanczos_extremes, Identity};
use crate::sparse::{add, norm, sub, SparseMatrix};
use crate::up_projection::{build_up_projection, UpProjectionReport, UpProjectionState};
use crate::up_solver::{build_sphere_fast_solver, build_up_solver, UpSolveReport, UpSolverState};

pub use union::{
    coincident_classes, glue, read_union, union_one_lap_solve, Chunk, ChunkFile, UnionComplex, UnionFile, VertexClass,
};

/// Lanczos iterations for each condition number estimate.
pub const KAPPA_ITERS: usize = 50;
/// Safety factor on the condition number estimate.
pub const KAPPA_SAFETY: f64 = 2.0;
/// Largest simplex count per dimension accepted by [`betti_numbers`].
pub const BETTI_CAP: usize = oracle::SIZE_CAP;

/// Extreme nonzero eigenvalue estimates of both halves of `L₁`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct KappaEstimate {
    pub down: (f64, f64),
    pub up: (f64, f64),
    /// `max(κ(L₁ᵈᵒʷⁿ), κ(L₁ᵘᵖ))` with the safety factor applied.
    pub kappa: f64,
}

fn condition(lo_hi: (f64, f64)) -> f64 {
    match lo_hi {
        (_, hi) if hi <= 0.0 => 1.0,
        (lo, hi) if lo > 0.0 => (hi / lo).max(1.0),
        _ => f64::INFINITY,
    }
}

/// Outcome of a 1-Laplacian solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct OneLapReport {
    pub eps: f64,
    pub delta: f64,
    pub kappa: KappaEstimate,
    /// `‖b̃ᵘᵖ + b̃ᵈᵒʷⁿ‖`, the estimate of `‖Π₁b‖`.
    pub projected_norm: f64,
    pub down_projection: Vec<ProjectionReport>,
    pub up_projection: Vec<UpProjectionReport>,
    pub up_solve: Option<UpSolveReport>,
    /// `‖L₁x̃ − (b̃ᵘᵖ + b̃ᵈᵒʷⁿ)‖ / ‖b̃ᵘᵖ + b̃ᵈᵒʷⁿ‖`.
    pub relative_residual: f64,
}

/// Solution with the projected right-hand side `b̃ᵘᵖ + b̃ᵈᵒʷⁿ` it was checked against.
#[derive(Clone, Debug)]
pub struct OneLapSolution {
    pub x: Vec<f64>,
    pub rhs: Vec<f64>,
    pub report: OneLapReport,
}

/// Preprocessed 1-Laplacian solver for one complex and hollowing.
pub struct OneLapSolver<'a> {
    pub complex: &'a Complex3,
    pub down: DownSolver<'a>,
    pub up: UpSolverState,
    pub projection: UpProjectionState,
    pub l1: SparseMatrix,
    pub kappa: KappaEstimate,
}

impl<'a> OneLapSolver<'a> {
    /// Uses the surface fast path for sphere hollowings and nested dissection otherwise.
    pub fn new(c: &'a Complex3, h: &Hollowing) -> Result<Self> {
        let up = match h.kind {
            HollowingKind::Sphere => build_sphere_fast_solver(c, h)?,
            HollowingKind::Shell => build_up_solver(c, h)?,
        };
        Self::with_up_solver(c, h, up)
    }

    /// Uses a prebuilt up-Laplacian solver for `(c, h)`.
    pub fn with_up_solver(c: &'a Complex3, h: &Hollowing, up: UpSolverState) -> Result<Self> {
        let projection = build_up_projection(c, h)?;
        let down = DownSolver::new(c);
        let l_down = down.d1.transpose().gram(&c.weights.w0);
        let n = c.num_edges();
        let down_ext = lanczos_extremes(&l_down, &Identity(n), KAPPA_ITERS, 0xd0e);
        let up_ext = lanczos_extremes(&up.l, &Identity(n), KAPPA_ITERS, 0x0be);
        let kappa = KappaEstimate {
            down: down_ext,
            up: up_ext,
            kappa: KAPPA_SAFETY * condition(down_ext).max(condition(up_ext)),
        };
        Ok(Self { complex: c, down, up, projection, l1: one_laplacian(c), kappa })
    }

    pub fn delta(&self, eps: f64) -> f64 {
        eps / (11.0 * self.kappa.kappa)
    }

    /// Approximates `L₁⁺ b` so that `‖L₁x̃ − Π₁b‖ ≤ eps‖Π₁b‖`.
    pub fn solve(&self, b: &[f64], eps: f64) -> Result<(Vec<f64>, OneLapReport)> {
        let sol = self.solve_full(b, eps)?;
        Ok((sol.x, sol.report))
    }

    /// As [`OneLapSolver::solve`], also returning the projected right-hand side.
    pub fn solve_full(&self, b: &[f64], eps: f64) -> Result<OneLapSolution> {
        let n = self.complex.num_edges();
        if b.len() != n {
            return Err(Error::IndexMismatch(format!("vector of length {}, expected {n}", b.len())));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
        }
        let delta = self.delta(eps);
        let mut report = OneLapReport { eps, delta, kappa: self.kappa, ..Default::default() };
        if norm(b) == 0.0 {
            return Ok(OneLapSolution { x: vec![0.0; n], rhs: vec![0.0; n], report });
        }
        let (b_down, rep) = self.down.down_projection(b, delta)?;
        report.down_projection.push(rep);
        let (b_up, rep) = self.projection.project(b, delta)?;
        report.up_projection.push(rep);
        let target = add(&b_up, &b_down);
        report.projected_norm = norm(&target);
        if report.projected_norm == 0.0 {
            return Ok(OneLapSolution { x: vec![0.0; n], rhs: target, report });
        }
        let x_down = if norm(&b_down) > 0.0 { self.down.down_lap_solve(&b_down)? } else { vec![0.0; n] };
        let x_up = if norm(&b_up) > 0.0 {
            let (x, rep) = self.up.solve(&b_up, delta)?;
            report.up_solve = Some(rep);
            x
        } else {
            vec![0.0; n]
        };
        let (p_up, rep) = self.projection.project(&x_up, delta)?;
        report.up_projection.push(rep);
        let (p_down, rep) = self.down.down_projection(&x_down, delta)?;
        report.down_projection.push(rep);
        let x = add(&p_up, &p_down);
        report.relative_residual = norm(&sub(&self.l1.mul_vec(&x), &target)) / report.projected_norm;
        if report.relative_residual > eps {
            return Err(Error::NotConverged(format!(
                "relative residual {:.3e} exceeds eps = {eps:.1e}",
                report.relative_residual
            )));
        }
        Ok(OneLapSolution { x, rhs: target, report })
    }

    /// Splits `f` into gradient, curl and harmonic parts, each projection within `eps`.
    pub fn hodge(&self, f: &[f64], eps: f64) -> Result<HodgeParts> {
        let (gradient, _) = self.down.down_projection(f, eps)?;
        let (curl, _) = self.projection.project(f, eps)?;
        let harmonic = sub(&sub(f, &gradient), &curl);
        Ok(HodgeParts { gradient, curl, harmonic })
    }
}

/// Gradient, curl and harmonic components of a 1-chain.
#[derive(Clone, Debug, Serialize)]
pub struct HodgeParts {
    pub gradient: Vec<f64>,
    pub curl: Vec<f64>,
    pub harmonic: Vec<f64>,
}

/// Builds the solver and approximates `L₁⁺ b` within relative residual `eps`.
pub fn one_lap_solve(c: &Complex3, h: &Hollowing, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    Ok(OneLapSolver::new(c, h)?.solve(b, eps)?.0)
}

pub fn hodge_decompose(c: &Complex3, h: &Hollowing, f: &[f64], eps: f64) -> Result<HodgeParts> {
    OneLapSolver::new(c, h)?.hodge(f, eps)
}

/// `(β₀, β₁, β₂)` from dense ranks of the boundary operators.
pub fn betti_numbers(c: &Complex3) -> Result<(usize, usize, usize)> {
    let size = c.num_vertices().max(c.num_edges()).max(c.num_triangles()).max(c.num_tets());
    if size > BETTI_CAP {
        return Err(Error::SizeCap { size, cap: BETTI_CAP });
    }
    let rank = |i: usize| -> Result<usize> {
        let d = boundary_operator(c, i)?.to_f64();
        oracle::rank(&oracle::from_sparse(&d), oracle::DEFAULT_TOL)
    };
    let (r1, r2, r3) = (rank(1)?, rank(2)?, rank(3)?);
    Ok((c.num_vertices() - r1, c.num_edges() - r1 - r2, c.num_triangles() - r2 - r3))
}

#[cfg(test)]
mod tests;
