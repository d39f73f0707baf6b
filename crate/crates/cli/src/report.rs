//! Solve reports written by `solve` and `union-solve`.

use serde::Serialize;

use hollowlap::complex::Complex3;
use hollowlap::one_lap::{KappaEstimate, OneLapSolution, OneLapSolver};
use hollowlap::sparse::{norm, sub};

#[derive(Clone, Debug, Default, Serialize)]
pub struct MeshCounts {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub tets: usize,
}

impl MeshCounts {
    pub fn of(c: &Complex3) -> Self {
        Self { vertices: c.num_vertices(), edges: c.num_edges(), triangles: c.num_triangles(), tets: c.num_tets() }
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub preprocess: f64,
    pub solve: f64,
}

/// PCG iterations per stage.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Iterations {
    pub up_schur: usize,
    pub up_projection: Vec<usize>,
    pub down_projection: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    pub delta: f64,
    pub r: f64,
    pub chunks: usize,
    pub kappa: KappaEstimate,
    pub coupling_norm: f64,
    pub mesh: MeshCounts,
    pub boundary_edges: usize,
    pub regions: usize,
    /// `‖b̃‖`, the residual of the zero vector against the projected right-hand side.
    pub initial_residual: f64,
    /// `‖L₁x̃ − b̃‖`, recomputed from the returned vector.
    pub final_residual: f64,
    pub relative_residual: f64,
    pub iterations: Iterations,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct Summary {
    pub relative_residual: f64,
    pub pcg_iters_schur: usize,
    pub t_preprocess: f64,
    pub t_solve: f64,
}

impl SolveReport {
    pub fn fill(&mut self, solver: &OneLapSolver<'_>, sol: &OneLapSolution) {
        let rep = &sol.report;
        self.delta = rep.delta;
        self.kappa = rep.kappa;
        self.coupling_norm = solver.up.coupling_norm;
        self.boundary_edges = solver.up.c_edges.len();
        self.regions = solver.up.num_regions();
        self.initial_residual = norm(&sol.rhs);
        self.final_residual = norm(&sub(&solver.l1.mul_vec(&sol.x), &sol.rhs));
        self.relative_residual = if self.initial_residual > 0.0 { self.final_residual / self.initial_residual } else { 0.0 };
        self.iterations = Iterations {
            up_schur: rep.up_solve.as_ref().map_or(0, |u| u.pcg.iterations),
            up_projection: rep.up_projection.iter().map(|p| p.pcg.iterations).collect(),
            down_projection: rep.down_projection.iter().map(|p| p.pcg.as_ref().map_or(0, |s| s.iterations)).collect(),
        };
    }

    pub fn summary(&self) -> Summary {
        Summary {
            relative_residual: self.relative_residual,
            pcg_iters_schur: self.iterations.up_schur,
            t_preprocess: self.timings.preprocess,
            t_solve: self.timings.solve,
        }
    }
}
