//! Exact down-Laplacian solves through a spanning forest, and the down-projection.

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::Serialize;

use crate::complex::{boundary_operator, Complex3};
use crate::error::{Error, Result};
use crate::nested_dissection::{cholesky, nd_ordering_default, CholeskyFactor, PIVOT_TOL};
use crate::pcg::{norm_upper_bound, pcg, Jacobi, PcgOptions, SolveReport};
use crate::sparse::{norm, sub, SparseMatrix};

const NONE: usize = usize::MAX;

/// Relative residual above which a forest solve reports `b` outside the image.
pub const FOREST_TOL: f64 = 1e-8;

/// BFS spanning forest of a graph given by oriented edges `[tail, head]`.
#[derive(Clone, Debug)]
pub struct SpanningForest {
    /// Root of each component (its smallest vertex).
    pub roots: Vec<usize>,
    pub component: Vec<usize>,
    pub parent: Vec<usize>,
    pub parent_edge: Vec<usize>,
    /// Coefficient of the vertex in the boundary of its parent edge.
    pub sign: Vec<f64>,
    /// Vertices in BFS order, roots first within their component.
    pub order: Vec<usize>,
    /// Eccentricity of each root.
    pub depth: Vec<usize>,
}

impl SpanningForest {
    pub fn new(num_vertices: usize, edges: &[[usize; 2]]) -> Self {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_vertices];
        for (e, &[a, b]) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        let mut f = SpanningForest {
            roots: Vec::new(),
            component: vec![NONE; num_vertices],
            parent: vec![NONE; num_vertices],
            parent_edge: vec![NONE; num_vertices],
            sign: vec![0.0; num_vertices],
            order: Vec::with_capacity(num_vertices),
            depth: Vec::new(),
        };
        let mut level = vec![0usize; num_vertices];
        let mut queue = VecDeque::new();
        for root in 0..num_vertices {
            if f.component[root] != NONE {
                continue;
            }
            let id = f.roots.len();
            f.roots.push(root);
            f.component[root] = id;
            queue.push_back(root);
            let mut ecc = 0;
            while let Some(v) = queue.pop_front() {
                f.order.push(v);
                ecc = ecc.max(level[v]);
                for &(w, e) in &adj[v] {
                    if f.component[w] == NONE {
                        f.component[w] = id;
                        f.parent[w] = v;
                        f.parent_edge[w] = e;
                        f.sign[w] = if edges[e][1] == w { 1.0 } else { -1.0 };
                        level[w] = level[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            f.depth.push(ecc);
        }
        f
    }

    pub fn num_components(&self) -> usize {
        self.roots.len()
    }

    /// Tree edges, one per non-root vertex.
    pub fn tree_edges(&self) -> Vec<usize> {
        self.parent_edge.iter().copied().filter(|&e| e != NONE).collect()
    }

    /// A solution `y` of `∂₁ᵀ y = b₁`, zero at every root. Not residual-checked.
    pub fn partial1_transpose(&self, edges: &[[usize; 2]], b1: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.parent.len()];
        for &v in &self.order {
            let p = self.parent[v];
            if p != NONE {
                let e = self.parent_edge[v];
                // (∂₁ᵀ y)_e = y[hi] − y[lo]
                y[v] = if edges[e][1] == v { y[p] + b1[e] } else { y[p] - b1[e] };
            }
        }
        y
    }

    /// A solution `x` of `∂₁ x = b₀` supported on tree edges. Not residual-checked.
    pub fn partial1(&self, num_edges: usize, b0: &[f64]) -> Vec<f64> {
        let mut rem = b0.to_vec();
        let mut x = vec![0.0; num_edges];
        for &v in self.order.iter().rev() {
            let p = self.parent[v];
            if p != NONE {
                let e = self.parent_edge[v];
                x[e] = rem[v] / self.sign[v];
                rem[p] += self.sign[v] * x[e];
            }
        }
        x
    }
}

/// Solves `∂₁ᵀ W ∂₁ x = b` on the graph spanned by `forest`, for `b` in the image.
///
/// `w` holds the vertex weights. Not residual-checked.
pub fn forest_down_solve(forest: &SpanningForest, edges: &[[usize; 2]], w: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = forest.partial1_transpose(edges, b);
    // Shift each component by a constant so W⁻¹ y sums to zero there.
    let k = forest.num_components();
    let (mut num, mut den) = (vec![0.0; k], vec![0.0; k]);
    for (v, &yv) in y.iter().enumerate() {
        let comp = forest.component[v];
        num[comp] += yv / w[v];
        den[comp] += 1.0 / w[v];
    }
    for (v, yv) in y.iter_mut().enumerate() {
        let comp = forest.component[v];
        *yv = (*yv - num[comp] / den[comp]) / w[v];
    }
    forest.partial1(edges.len(), &y)
}

fn check_residual(r: &[f64], b: &[f64]) -> Result<()> {
    let (nr, nb) = (norm(r), norm(b));
    if nr > FOREST_TOL * nb || (nb == 0.0 && nr > 0.0) {
        return Err(Error::NotInImage(if nb > 0.0 { nr / nb } else { nr }));
    }
    Ok(())
}

/// Exact solver for `L₁ᵈᵒʷⁿ = ∂₁ᵀ W₀ ∂₁` and the down-projection on one complex.
pub struct DownSolver<'a> {
    pub complex: &'a Complex3,
    pub forest: SpanningForest,
    pub d1: SparseMatrix,
    graph: OnceLock<Result<(SparseMatrix, CholeskyFactor)>>,
}

/// Outcome of a down-projection.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ProjectionReport {
    pub pcg: Option<SolveReport>,
    pub used_cholesky: bool,
    pub target_tol: f64,
}

impl<'a> DownSolver<'a> {
    pub fn new(c: &'a Complex3) -> Self {
        let d1 = boundary_operator(c, 1).expect("dimension 1 is valid").to_f64();
        Self { complex: c, forest: SpanningForest::new(c.num_vertices(), &c.edges), d1, graph: OnceLock::new() }
    }

    pub fn solve_partial1_transpose(&self, b1: &[f64]) -> Result<Vec<f64>> {
        dims(b1.len(), self.complex.num_edges())?;
        let y = self.forest.partial1_transpose(&self.complex.edges, b1);
        check_residual(&sub(&self.d1.mul_t_vec(&y), b1), b1)?;
        Ok(y)
    }

    pub fn solve_partial1(&self, b0: &[f64]) -> Result<Vec<f64>> {
        dims(b0.len(), self.complex.num_vertices())?;
        let x = self.forest.partial1(self.complex.num_edges(), b0);
        check_residual(&sub(&self.d1.mul_vec(&x), b0), b0)?;
        Ok(x)
    }

    /// Solves `L₁ᵈᵒʷⁿ x = b` exactly for `b` in its image.
    pub fn down_lap_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let w0 = &self.complex.weights.w0;
        self.solve_partial1_transpose(b)?;
        let x = forest_down_solve(&self.forest, &self.complex.edges, w0, b);
        let lx = self.d1.mul_t_vec(&w0.iter().zip(self.d1.mul_vec(&x)).map(|(w, v)| w * v).collect::<Vec<_>>());
        let r = sub(&lx, b);
        let nb = norm(b);
        if norm(&r) > 1e-10 * nb.max(f64::MIN_POSITIVE) && norm(&r) > 0.0 {
            return Err(Error::NotInImage(norm(&r) / nb.max(f64::MIN_POSITIVE)));
        }
        Ok(x)
    }

    fn graph_laplacian(&self) -> Result<&(SparseMatrix, CholeskyFactor)> {
        self.graph
            .get_or_init(|| {
                let l0 = self.d1.gram(&vec![1.0; self.complex.num_edges()]);
                let perm = nd_ordering_default(&self.complex.vertices, &l0.adjacency());
                let f = cholesky(&l0, &perm, PIVOT_TOL)?;
                Ok((l0, f))
            })
            .as_ref()
            .map_err(|e| Error::NotConverged(format!("graph Laplacian factorization failed: {e}")))
    }

    /// Relative residual on `∂₁∂₁ᵀ φ = ∂₁ b` that guarantees `‖p − Πb‖ ≤ eps‖Πb‖`.
    ///
    /// Uses `λ₂ ≥ 4/(nD)` per component and `λmax ≤ 2·maxdeg`.
    pub fn residual_target(&self, eps: f64) -> f64 {
        let mut sizes = vec![0usize; self.forest.num_components()];
        for &c in &self.forest.component {
            sizes[c] += 1;
        }
        let mut lam2 = f64::INFINITY;
        for (c, &n) in sizes.iter().enumerate() {
            if n > 1 {
                let diam = (2 * self.forest.depth[c]).max(1) as f64;
                lam2 = lam2.min(4.0 / (n as f64 * diam));
            }
        }
        let mut deg = vec![0usize; self.complex.num_vertices()];
        for &[a, b] in &self.complex.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let lmax = 2.0 * deg.into_iter().max().unwrap_or(1) as f64;
        if !lam2.is_finite() {
            return eps;
        }
        eps * (lam2 / lmax).sqrt()
    }

    /// Approximates `Π₁ᵈᵒʷⁿ b = ∂₁ᵀ(∂₁∂₁ᵀ)⁺∂₁ b` within relative error `eps`.
    pub fn down_projection(&self, b: &[f64], eps: f64) -> Result<(Vec<f64>, ProjectionReport)> {
        dims(b.len(), self.complex.num_edges())?;
        let g = self.d1.mul_vec(b);
        let tol = self.residual_target(eps);
        let mut report = ProjectionReport { target_tol: tol, ..Default::default() };
        // ∂₁b at rounding level carries no recoverable gradient part.
        if norm(&g) <= 8.0 * f64::EPSILON * norm_upper_bound(&self.d1).sqrt() * norm(b) {
            return Ok((vec![0.0; b.len()], report));
        }
        let l0 = self.d1.gram(&vec![1.0; self.complex.num_edges()]);
        if tol >= 1e-13 {
            let (phi, rep) = pcg(&l0, &Jacobi::new(&l0), &g, PcgOptions { tol, max_iters: None, check_symmetry: false })?;
            let ok = rep.converged;
            report.pcg = Some(rep);
            if ok {
                return Ok((self.d1.mul_t_vec(&phi), report));
            }
        }
        let (_, f) = self.graph_laplacian()?;
        let phi = f.solve(&g)?;
        report.used_cholesky = true;
        Ok((self.d1.mul_t_vec(&phi), report))
    }

    /// `∂₁ᵀ W₀^{1/2} u` with `u = W₀^{−1/2} 𝟙`; zero for every positive weighting.
    pub fn kernel_vector_residual(&self) -> Vec<f64> {
        let u: Vec<f64> = self.complex.weights.w0.iter().map(|w| w.sqrt() * (1.0 / w.sqrt())).collect();
        self.d1.mul_t_vec(&u)
    }
}

fn dims(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::IndexMismatch(format!("vector of length {got}, expected {want}")));
    }
    Ok(())
}

pub fn solve_partial1_transpose(c: &Complex3, b1: &[f64]) -> Result<Vec<f64>> {
    DownSolver::new(c).solve_partial1_transpose(b1)
}

pub fn solve_partial1(c: &Complex3, b0: &[f64]) -> Result<Vec<f64>> {
    DownSolver::new(c).solve_partial1(b0)
}

pub fn down_lap_solve(c: &Complex3, b: &[f64]) -> Result<Vec<f64>> {
    DownSolver::new(c).down_lap_solve(b)
}

pub fn down_projection(c: &Complex3, b: &[f64], eps: f64) -> Result<Vec<f64>> {
    Ok(DownSolver::new(c).down_projection(b, eps)?.0)
}
