//! Exact solver for `L₁ᵘᵖ_T` when `T` is a union of triangulated spheres.
//!
//! Triangles of `T` are grouped into discs (connected pieces separating the same
//! pair of regions) and oriented consistently inside each disc. Edges inside a
//! disc (`E₁`) then have rows `1_a − 1_b` in `∂₂,Tᵀ`, so `B₁ W B₁ᵀ` is a graph
//! down-Laplacian solved through a spanning forest. The remaining edges (`E₂`) are
//! reduced to one representative per disc set and sign pattern, and the small
//! Schur complement on the representatives is inverted densely.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use super::{block_eliminate, positions, qr};
use crate::complex::Complex3;
use crate::down_solver::{forest_down_solve, SpanningForest};
use crate::error::{Error, Result};
use crate::hollowing::Hollowing;
use crate::sparse::{dot, gather, scatter};

const EXTERIOR: usize = usize::MAX;

/// Relative rank threshold for the dense Schur complement.
pub const SCHUR_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SurfaceStats {
    pub triangles: usize,
    pub discs: usize,
    pub e1: usize,
    pub e2: usize,
    pub e2_representatives: usize,
    pub schur_rank: usize,
}

pub struct SurfaceSolver {
    dim: usize,
    w: Vec<f64>,
    /// `E₁` as boundary-local edge indices.
    pub e1: Vec<usize>,
    /// `[minus, plus]` triangle of each `E₁` edge.
    pub e1_graph: Vec<[usize; 2]>,
    forest: SpanningForest,
    /// Representatives of `E₂` as boundary-local edge indices.
    pub e2_rep: Vec<usize>,
    /// Nonzeros `(triangle, coefficient)` of each representative row of the oriented `∂₂,T`.
    rep_rows: Vec<Vec<(usize, f64)>>,
    /// Nonzeros `(E₁ index, value)` of each column of `M₁₂`.
    m12: Vec<Vec<(usize, f64)>>,
    sc_pinv: Vec<Vec<f64>>,
    /// Orientation sign of each triangle of `T`.
    pub orientation: Vec<f64>,
    /// Disc of each triangle of `T`.
    pub disc: Vec<usize>,
    pub stats: SurfaceStats,
}

impl SurfaceSolver {
    /// `c_edges` and `t` are the boundary edges and boundary triangles of `h`.
    pub fn new(c: &Complex3, h: &Hollowing, c_edges: &[usize], t: &[usize]) -> Result<Self> {
        let c_pos = positions(c.num_edges(), c_edges);
        let nt = t.len();
        let key: Vec<(usize, usize)> = t
            .iter()
            .map(|&f| {
                let rs: Vec<usize> = c.triangle_tets[f].iter().map(|&k| h.tet_region[k]).collect();
                match rs[..] {
                    [a] => (a, EXTERIOR),
                    [a, b] => (a.min(b), a.max(b)),
                    _ => unreachable!("a triangle lies in one or two tetrahedra"),
                }
            })
            .collect();
        // Triangles of T on each boundary edge, with their coefficient in ∂₂.
        let mut edge_tris: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c_edges.len()];
        for (k, &f) in t.iter().enumerate() {
            for (j, &e) in c.triangle_edges[f].iter().enumerate() {
                if c_pos[e] == usize::MAX {
                    return Err(Error::IndexMismatch(format!("boundary triangle {f} has a non-boundary edge {e}")));
                }
                edge_tris[c_pos[e]].push((k, if j % 2 == 0 { 1.0 } else { -1.0 }));
            }
        }
        let inner = |e: usize| edge_tris[e].len() == 2 && key[edge_tris[e][0].0] == key[edge_tris[e][1].0];
        let mut tri_inner: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for e in (0..c_edges.len()).filter(|&e| inner(e)) {
            tri_inner[edge_tris[e][0].0].push(e);
            tri_inner[edge_tris[e][1].0].push(e);
        }
        // Discs and a consistent orientation inside each.
        let mut disc = vec![usize::MAX; nt];
        let mut orientation = vec![0.0; nt];
        let mut num_discs = 0;
        let mut queue = VecDeque::new();
        for s in 0..nt {
            if disc[s] != usize::MAX {
                continue;
            }
            disc[s] = num_discs;
            orientation[s] = 1.0;
            queue.push_back(s);
            while let Some(a) = queue.pop_front() {
                for &e in &tri_inner[a] {
                    let (p, q) = (edge_tris[e][0], edge_tris[e][1]);
                    let ((_, sa), (b, sb)) = if p.0 == a { (p, q) } else { (q, p) };
                    let ob = -sa * orientation[a] / sb;
                    if disc[b] == usize::MAX {
                        disc[b] = num_discs;
                        orientation[b] = ob;
                        queue.push_back(b);
                    } else if orientation[b] != ob {
                        return Err(Error::UnsupportedGeometry(format!("disc {num_discs} is not orientable")));
                    }
                }
            }
            num_discs += 1;
        }
        let mut e1 = Vec::new();
        let mut e1_graph = Vec::new();
        let mut e2 = Vec::new();
        for (e, tris) in edge_tris.iter().enumerate() {
            if inner(e) {
                let (a, sa) = tris[0];
                let b = tris[1].0;
                e1.push(e);
                e1_graph.push(if sa * orientation[a] > 0.0 { [b, a] } else { [a, b] });
            } else {
                e2.push(e);
            }
        }
        // One representative per (disc set, normalized sign pattern).
        type RowKey = (Vec<(usize, i8)>, Option<usize>);
        let mut reps: HashMap<RowKey, usize> = HashMap::new();
        let mut e2_rep = Vec::new();
        let mut rep_rows = Vec::new();
        for &e in &e2 {
            let mut row: Vec<(usize, f64)> = edge_tris[e].iter().map(|&(k, s)| (k, s * orientation[k])).collect();
            let mut pattern: Vec<(usize, i8)> = row.iter().map(|&(k, s)| (disc[k], s as i8)).collect();
            pattern.sort_unstable();
            let repeated = pattern.windows(2).any(|p| p[0].0 == p[1].0);
            if pattern.first().is_some_and(|p| p.1 < 0) {
                pattern.iter_mut().for_each(|p| p.1 = -p.1);
            }
            let unique = if repeated || pattern.is_empty() { Some(e) } else { None };
            reps.entry((pattern, unique)).or_insert_with(|| {
                row.sort_unstable_by_key(|p| p.0);
                e2_rep.push(e);
                rep_rows.push(row);
                e2_rep.len() - 1
            });
        }
        let w: Vec<f64> = t.iter().map(|&f| c.weights.w2[f]).collect();
        let forest = SpanningForest::new(nt, &e1_graph);
        let mut solver = SurfaceSolver {
            dim: c_edges.len(),
            w,
            e1,
            e1_graph,
            forest,
            e2_rep,
            rep_rows,
            m12: Vec::new(),
            sc_pinv: Vec::new(),
            orientation,
            disc,
            stats: SurfaceStats { triangles: nt, discs: num_discs, e2: e2.len(), ..Default::default() },
        };
        solver.stats.e1 = solver.e1.len();
        solver.stats.e2_representatives = solver.e2_rep.len();
        solver.factor_schur(&tri_inner, &positions(c_edges.len(), &solver.e1));
        Ok(solver)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Builds `M₁₂` and the pseudoinverse of `M₂₂ − M₁₂ᵀ M₁₁⁺ M₁₂`.
    fn factor_schur(&mut self, tri_inner: &[Vec<usize>], e1_pos: &[usize]) {
        let m2 = self.e2_rep.len();
        self.m12 = self
            .rep_rows
            .iter()
            .map(|row| {
                let mut col: HashMap<usize, f64> = HashMap::new();
                for &(k, s) in row {
                    for &e in &tri_inner[k] {
                        let i = e1_pos[e];
                        let sign = if self.e1_graph[i][1] == k { 1.0 } else { -1.0 };
                        *col.entry(i).or_insert(0.0) += sign * s * self.w[k];
                    }
                }
                let mut col: Vec<(usize, f64)> = col.into_iter().collect();
                col.sort_unstable_by_key(|p| p.0);
                col
            })
            .collect();
        let mut tri_reps: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (j, row) in self.rep_rows.iter().enumerate() {
            for &(k, s) in row {
                tri_reps.entry(k).or_default().push((j, s));
            }
        }
        let mut sc = vec![vec![0.0; m2]; m2];
        for (k, list) in &tri_reps {
            for &(i, si) in list {
                for &(j, sj) in list {
                    sc[i][j] += si * sj * self.w[*k];
                }
            }
        }
        for j in 0..m2 {
            let x = self.m11_solve(&self.dense_m12(j));
            for i in 0..m2 {
                sc[i][j] -= self.m12[i].iter().map(|&(k, v)| v * x[k]).sum::<f64>();
            }
        }
        // Symmetrize away rounding before the pseudoinverse.
        for i in 0..m2 {
            for j in 0..i {
                let a = 0.5 * (sc[i][j] + sc[j][i]);
                sc[i][j] = a;
                sc[j][i] = a;
            }
        }
        let (p, rank) = qr::pinv(&sc, m2, SCHUR_RANK_TOL);
        self.sc_pinv = p;
        self.stats.schur_rank = rank;
    }

    fn dense_m12(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.e1.len()];
        self.m12[j].iter().for_each(|&(i, x)| v[i] = x);
        v
    }

    /// `M₁₁⁺ b` for `b` in the image of `B₁`.
    fn m11_solve(&self, b: &[f64]) -> Vec<f64> {
        forest_down_solve(&self.forest, &self.e1_graph, &self.w, b)
    }

    /// `M₂₁ x = B̂₂ W B₁ᵀ x`.
    fn m21_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.w.len()];
        for (xi, &[a, b]) in x.iter().zip(&self.e1_graph) {
            y[b] += xi;
            y[a] -= xi;
        }
        self.rep_rows.iter().map(|row| row.iter().map(|&(k, s)| s * self.w[k] * y[k]).sum()).collect()
    }

    /// `M₁₂ v`.
    fn m12_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.e1.len()];
        for (col, vj) in self.m12.iter().zip(v) {
            col.iter().for_each(|&(i, x)| out[i] += x * vj);
        }
        out
    }

    /// Solves `L₁ᵘᵖ_T x = b` for `b` in its image (boundary-local indexing).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let b1 = gather(b, &self.e1);
        let b2 = gather(b, &self.e2_rep);
        let (x1, x2) = block_eliminate(
            &|v| Ok(self.m11_solve(v)),
            &|h, _| Ok(self.sc_pinv.iter().map(|row| dot(row, h)).collect()),
            &|v| self.m21_apply(v),
            &|v| self.m12_apply(v),
            &b1,
            &b2,
            0.0,
        )
        .expect("surface solves are infallible");
        let mut x = vec![0.0; self.dim];
        scatter(&x1, &self.e1, &mut x);
        scatter(&x2, &self.e2_rep, &mut x);
        x
    }
}
