//! Oriented weighted pure 3-complexes, boundary operators and Laplacians.
//!
//! Every simplex is stored with its vertices in ascending order, so the sign of a
//! face in `∂ᵢ` depends only on the position of the omitted vertex. Tetrahedra keep
//! their input order. Triangles and edges are derived from the tetrahedra and
//! numbered in lexicographic order of their vertex tuples; vectors on edges and
//! triangles use this numbering.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{IntMatrix, SparseMatrix};

pub type Point = [f64; 3];

/// Per-dimension simplex weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
}

/// Optional weights supplied to [`build_complex`]; missing entries default to 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w3: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Complex3 {
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub weights: Weights,
    pub exterior_triangle: Vec<bool>,
    pub exterior_edge: Vec<bool>,
    pub exterior_vertex: Vec<bool>,
    /// Triangle indices of each tetrahedron, face omitting vertex `j` at slot `j`.
    pub tet_triangles: Vec<[usize; 4]>,
    /// Edge indices of each triangle, face omitting vertex `j` at slot `j`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Tetrahedra containing each triangle (one or two).
    pub triangle_tets: Vec<Vec<usize>>,
    edge_index: HashMap<[usize; 2], usize>,
    triangle_index: HashMap<[usize; 3], usize>,
}

fn sorted4(t: [usize; 4]) -> [usize; 4] {
    let mut s = t;
    s.sort_unstable();
    s
}

/// Builds a complex from tetrahedra and coordinates.
pub fn build_complex(tets: &[[usize; 4]], coords: &[Point], weights: Option<WeightInput>) -> Result<Complex3> {
    let nv = coords.len();
    let mut seen = HashMap::with_capacity(tets.len());
    let mut stored = Vec::with_capacity(tets.len());
    for (k, &t) in tets.iter().enumerate() {
        let s = sorted4(t);
        if let Some(&v) = s.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidInput(format!("tetrahedron {k} references vertex {v} but only {nv} vertices exist")));
        }
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Degenerate(format!("tetrahedron {t:?} repeats a vertex")));
        }
        if seen.insert(s, k).is_some() {
            return Err(Error::DuplicateTet(t));
        }
        stored.push(s);
    }

    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(4 * stored.len());
    for t in &stored {
        for j in 0..4 {
            tris.push(omit4(t, j));
        }
    }
    tris.sort_unstable();
    tris.dedup();
    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(3 * tris.len());
    for f in &tris {
        for j in 0..3 {
            edges.push(omit3(f, j));
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let triangle_index: HashMap<[usize; 3], usize> = tris.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let edge_index: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let tet_triangles: Vec<[usize; 4]> = stored
        .iter()
        .map(|t| std::array::from_fn(|j| triangle_index[&omit4(t, j)]))
        .collect();
    let triangle_edges: Vec<[usize; 3]> = tris
        .iter()
        .map(|f| std::array::from_fn(|j| edge_index[&omit3(f, j)]))
        .collect();
    let mut triangle_tets = vec![Vec::new(); tris.len()];
    for (k, tt) in tet_triangles.iter().enumerate() {
        for &f in tt {
            triangle_tets[f].push(k);
        }
    }
    let exterior_triangle: Vec<bool> = triangle_tets.iter().map(|v| v.len() == 1).collect();
    let mut exterior_edge = vec![false; edges.len()];
    let mut exterior_vertex = vec![false; nv];
    for (f, tri) in tris.iter().enumerate() {
        if exterior_triangle[f] {
            for &e in &triangle_edges[f] {
                exterior_edge[e] = true;
            }
            for &v in tri {
                exterior_vertex[v] = true;
            }
        }
    }

    let w = weights.unwrap_or_default();
    let pick = |w: Option<Vec<f64>>, n: usize, name: &str| -> Result<Vec<f64>> {
        match w {
            None => Ok(vec![1.0; n]),
            Some(v) if v.len() == n => Ok(v),
            Some(v) => Err(Error::InvalidInput(format!("{name} has {} entries, expected {n}", v.len()))),
        }
    };
    let weights = Weights {
        w0: pick(w.w0, nv, "w0")?,
        w1: pick(w.w1, edges.len(), "w1")?,
        w2: pick(w.w2, tris.len(), "w2")?,
        w3: pick(w.w3, stored.len(), "w3")?,
    };

    Ok(Complex3 {
        vertices: coords.to_vec(),
        tets: stored,
        triangles: tris,
        edges,
        weights,
        exterior_triangle,
        exterior_edge,
        exterior_vertex,
        tet_triangles,
        triangle_edges,
        triangle_tets,
        edge_index,
        triangle_index,
    })
}

fn omit4(t: &[usize; 4], j: usize) -> [usize; 3] {
    let mut out = [0; 3];
    let mut k = 0;
    for (i, &v) in t.iter().enumerate() {
        if i != j {
            out[k] = v;
            k += 1;
        }
    }
    out
}

fn omit3(f: &[usize; 3], j: usize) -> [usize; 2] {
    match j {
        0 => [f[1], f[2]],
        1 => [f[0], f[2]],
        _ => [f[0], f[1]],
    }
}

impl Complex3 {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// Total number of simplexes of all dimensions.
    pub fn num_simplexes(&self) -> usize {
        self.num_vertices() + self.num_edges() + self.num_triangles() + self.num_tets()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let e = if a < b { [a, b] } else { [b, a] };
        self.edge_index.get(&e).copied()
    }

    pub fn triangle_id(&self, v: [usize; 3]) -> Option<usize> {
        let mut s = v;
        s.sort_unstable();
        self.triangle_index.get(&s).copied()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        centroid(&[self.vertices[a], self.vertices[b]])
    }

    pub fn triangle_centroid(&self, f: usize) -> Point {
        let [a, b, c] = self.triangles[f];
        centroid(&[self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn tet_centroid(&self, t: usize) -> Point {
        let v = self.tets[t].map(|i| self.vertices[i]);
        centroid(&v)
    }

    /// Triangles containing each edge.
    pub fn edge_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_edges()];
        for (f, es) in self.triangle_edges.iter().enumerate() {
            for &e in es {
                out[e].push(f);
            }
        }
        out
    }

    /// Edges incident to each vertex.
    pub fn vertex_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            out[a].push(e);
            out[b].push(e);
        }
        out
    }

    /// Tetrahedra containing each vertex.
    pub fn vertex_tets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for (k, t) in self.tets.iter().enumerate() {
            for &v in t {
                out[v].push(k);
            }
        }
        out
    }

    /// Replaces the weights, checking lengths and positivity.
    pub fn with_weights(mut self, weights: Weights) -> Result<Self> {
        if weights.w0.len() != self.num_vertices()
            || weights.w1.len() != self.num_edges()
            || weights.w2.len() != self.num_triangles()
            || weights.w3.len() != self.num_tets()
        {
            return Err(Error::InvalidInput("weight vector lengths do not match simplex counts".into()));
        }
        self.weights = weights;
        Ok(self)
    }
}

pub fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    let mut c = [0.0; 3];
    for p in pts {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    c
}

/// Signed integer boundary operator `∂ᵢ` of shape `|Cᵢ₋₁| × |Cᵢ|`.
pub fn boundary_operator(c: &Complex3, i: usize) -> Result<IntMatrix> {
    let mut trip = Vec::new();
    let shape = match i {
        1 => {
            for (e, &[a, b]) in c.edges.iter().enumerate() {
                trip.push((a, e, -1));
                trip.push((b, e, 1));
            }
            (c.num_vertices(), c.num_edges())
        }
        2 => {
            for (f, es) in c.triangle_edges.iter().enumerate() {
                for (j, &e) in es.iter().enumerate() {
                    trip.push((e, f, if j % 2 == 0 { 1 } else { -1 }));
                }
            }
            (c.num_edges(), c.num_triangles())
        }
        3 => {
            for (t, fs) in c.tet_triangles.iter().enumerate() {
                for (j, &f) in fs.iter().enumerate() {
                    trip.push((f, t, if j % 2 == 0 { 1 } else { -1 }));
                }
            }
            (c.num_triangles(), c.num_tets())
        }
        _ => return Err(Error::InvalidInput(format!("boundary operator dimension {i} not in 1..=3"))),
    };
    Ok(IntMatrix::from_triplets(shape.0, shape.1, &trip))
}

/// `∂ᵢ₊₁ Wᵢ₊₁ ∂ᵢ₊₁ᵀ` for `i ∈ {0, 1}`.
pub fn up_laplacian(c: &Complex3, i: usize) -> Result<SparseMatrix> {
    match i {
        0 => Ok(boundary_operator(c, 1)?.to_f64().gram(&c.weights.w1)),
        1 => Ok(boundary_operator(c, 2)?.to_f64().gram(&c.weights.w2)),
        _ => Err(Error::InvalidInput(format!("up-Laplacian of dimension {i} not supported"))),
    }
}

/// `∂ᵢᵀ Wᵢ₋₁ ∂ᵢ` for `i ∈ {1, 2}`.
pub fn down_laplacian(c: &Complex3, i: usize) -> Result<SparseMatrix> {
    let (b, w) = match i {
        1 => (boundary_operator(c, 1)?, &c.weights.w0),
        2 => (boundary_operator(c, 2)?, &c.weights.w1),
        _ => return Err(Error::InvalidInput(format!("down-Laplacian of dimension {i} not supported"))),
    };
    Ok(b.to_f64().transpose().gram(w))
}

pub fn one_laplacian(c: &Complex3) -> SparseMatrix {
    let up = up_laplacian(c, 1).expect("dimension 1 is valid");
    let down = down_laplacian(c, 1).expect("dimension 1 is valid");
    up.add(&down)
}

/// Optional weight bounds checked by [`validate_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct WeightBounds {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Checks boundary identities, closure, weights and exterior flags; returns violations.
pub fn validate(c: &Complex3) -> Vec<String> {
    validate_with(c, WeightBounds::default())
}

pub fn validate_with(c: &Complex3, bounds: WeightBounds) -> Vec<String> {
    let mut v = Vec::new();
    match (boundary_operator(c, 1), boundary_operator(c, 2), boundary_operator(c, 3)) {
        (Ok(d1), Ok(d2), Ok(d3)) => v.extend(validate_operators(&d1, &d2, &d3)),
        _ => v.push("boundary operator construction failed".into()),
    }
    for t in &c.tets {
        for j in 0..4 {
            if c.triangle_id(omit4(t, j)).is_none() {
                v.push(format!("closure: face of tetrahedron {t:?} missing"));
            }
        }
    }
    for f in &c.triangles {
        for j in 0..3 {
            let [a, b] = omit3(f, j);
            if c.edge_id(a, b).is_none() {
                v.push(format!("closure: edge of triangle {f:?} missing"));
            }
        }
    }
    let checks = [
        ("w0", &c.weights.w0, c.num_vertices()),
        ("w1", &c.weights.w1, c.num_edges()),
        ("w2", &c.weights.w2, c.num_triangles()),
        ("w3", &c.weights.w3, c.num_tets()),
    ];
    for (name, w, n) in checks {
        if w.len() != n {
            v.push(format!("{name} has {} entries, expected {n}", w.len()));
        }
        if let Some(k) = w.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            v.push(format!("nonpositive weight: {name}[{k}] = {}", w[k]));
        }
        if let Some(lo) = bounds.min {
            if w.iter().any(|&x| x < lo) {
                v.push(format!("weight below bound {lo} in {name}"));
            }
        }
        if let Some(hi) = bounds.max {
            if w.iter().any(|&x| x > hi) {
                v.push(format!("weight above bound {hi} in {name}"));
            }
        }
    }
    for (f, tets) in c.triangle_tets.iter().enumerate() {
        if tets.len() > 2 {
            v.push(format!("triangle {f} lies in {} tetrahedra", tets.len()));
        }
        if c.exterior_triangle[f] != (tets.len() == 1) {
            v.push(format!("exterior flag of triangle {f} inconsistent"));
        }
    }
    v
}

/// Exact integer checks `∂₁∂₂ = 0` and `∂₂∂₃ = 0`.
pub fn validate_operators(d1: &IntMatrix, d2: &IntMatrix, d3: &IntMatrix) -> Vec<String> {
    let mut v = Vec::new();
    if d1.ncols != d2.nrows || d2.ncols != d3.nrows {
        v.push("boundary operator shapes do not chain".into());
        return v;
    }
    if !d1.matmul_exact(d2).is_empty() {
        v.push("∂₁∂₂ ≠ 0".into());
    }
    if !d2.matmul_exact(d3).is_empty() {
        v.push("∂₂∂₃ ≠ 0".into());
    }
    v
}

fn vsub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn vdot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn vnorm(a: Point) -> f64 {
    vdot(a, a).sqrt()
}

/// Center of the smallest sphere through the given 2–4 affinely independent points.
fn circumcenter(p: &[Point]) -> Option<Point> {
    let o = p[0];
    let d: Vec<Point> = p[1..].iter().map(|&q| vsub(q, o)).collect();
    // Center is o + Σ λ_k d_k with 2 d_j·c = |d_j|² for each j (Gram system).
    let m = d.len();
    let mut g = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for j in 0..m {
        for k in 0..m {
            g[j][k] = 2.0 * vdot(d[j], d[k]);
        }
        rhs[j] = vdot(d[j], d[j]);
    }
    let lam = solve_small(&g, &rhs, m)?;
    let mut c = o;
    for k in 0..m {
        for a in 0..3 {
            c[a] += lam[k] * d[k][a];
        }
    }
    Some(c)
}

fn solve_small(g: &[[f64; 3]; 3], rhs: &[f64; 3], m: usize) -> Option<[f64; 3]> {
    let mut a = *g;
    let mut b = *rhs;
    let scale = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for k in col..m {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Radius of the minimum enclosing ball of four points, by support-set case analysis.
pub fn min_enclosing_radius(p: &[Point; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let diam = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| vnorm(vsub(p[i], p[j])))
        .fold(0.0, f64::max);
    let tol = 1e-12 * diam.max(1e-300);
    for mask in 1u32..16 {
        if mask.count_ones() < 2 {
            continue;
        }
        let support: Vec<Point> = (0..4).filter(|&i| mask & (1 << i) != 0).map(|i| p[i]).collect();
        let Some(c) = circumcenter(&support) else { continue };
        let r = vnorm(vsub(support[0], c));
        if r < best && p.iter().all(|&q| vnorm(vsub(q, c)) <= r + tol) {
            best = r;
        }
    }
    best
}

pub fn tet_volume(p: &[Point; 4]) -> f64 {
    let a = vsub(p[1], p[0]);
    let b = vsub(p[2], p[0]);
    let c = vsub(p[3], p[0]);
    vdot(a, cross(b, c)).abs() / 6.0
}

/// Enclosing-ball radius over inscribed-ball radius of tetrahedron `t`.
pub fn aspect_ratio(c: &Complex3, t: usize) -> Result<f64> {
    let p = c.tets[t].map(|i| c.vertices[i]);
    aspect_ratio_points(&p)
}

pub fn aspect_ratio_points(p: &[Point; 4]) -> Result<f64> {
    let vol = tet_volume(p);
    let scale = (1..4).map(|i| vnorm(vsub(p[i], p[0]))).fold(0.0, f64::max);
    if !(vol > 1e-14 * scale.powi(3)) {
        return Err(Error::DegenerateGeometry(format!("tetrahedron has volume {vol:e}")));
    }
    let faces = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    let area: f64 = faces
        .iter()
        .map(|f| 0.5 * vnorm(cross(vsub(p[f[1]], p[f[0]]), vsub(p[f[2]], p[f[0]]))))
        .sum();
    let r_in = 3.0 * vol / area;
    Ok(min_enclosing_radius(p) / r_in)
}

/// On-disk complex format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexFile {
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightInput>,
}

impl ComplexFile {
    pub fn from_complex(c: &Complex3) -> Self {
        let unit = |w: &[f64]| w.iter().all(|&x| x == 1.0);
        let w = &c.weights;
        let weights = if unit(&w.w0) && unit(&w.w1) && unit(&w.w2) && unit(&w.w3) {
            None
        } else {
            Some(WeightInput {
                w0: Some(w.w0.clone()),
                w1: Some(w.w1.clone()),
                w2: Some(w.w2.clone()),
                w3: Some(w.w3.clone()),
            })
        };
        Self { vertices: c.vertices.clone(), tets: c.tets.clone(), weights }
    }

    pub fn build(self) -> Result<Complex3> {
        build_complex(&self.tets, &self.vertices, self.weights)
    }
}

pub fn read_complex(path: &Path) -> Result<Complex3> {
    let f: ComplexFile = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    f.build()
}

pub fn write_complex(c: &Complex3, path: &Path) -> Result<()> {
    let w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(w, &ComplexFile::from_complex(c))?;
    Ok(())
}
