//! Kuhn-subdivided grid meshes with optional cavities and tunnels.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{aspect_ratio, build_complex, Complex3, Point, Weights};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleKind {
    /// Void strictly inside the grid.
    Cavity,
    /// Hole running through the whole grid along one axis.
    Tunnel,
}

/// Axis-aligned box of removed cells, `lo` inclusive and `hi` exclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub kind: HoleKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    #[serde(default)]
    pub holes: Vec<Hole>,
}

/// Minimum gap, in cells, between two holes.
pub const HOLE_SEPARATION: usize = 6;

impl GridSpec {
    pub fn solid(a: usize, b: usize, c: usize) -> Self {
        Self { dims: [a, b, c], holes: Vec::new() }
    }

    pub fn with_hole(mut self, lo: [usize; 3], hi: [usize; 3], kind: HoleKind) -> Self {
        self.holes.push(Hole { lo, hi, kind });
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidInput("grid dimensions must be positive".into()));
        }
        for (k, h) in self.holes.iter().enumerate() {
            for a in 0..3 {
                if h.lo[a] >= h.hi[a] || h.hi[a] > self.dims[a] {
                    return Err(Error::InvalidInput(format!("hole {k} out of bounds on axis {a}")));
                }
            }
            match h.kind {
                HoleKind::Cavity => {
                    if (0..3).any(|a| h.lo[a] == 0 || h.hi[a] == self.dims[a]) {
                        return Err(Error::InvalidInput(format!("cavity {k} touches the grid boundary")));
                    }
                }
                HoleKind::Tunnel => {
                    let through: Vec<usize> =
                        (0..3).filter(|&a| h.lo[a] == 0 && h.hi[a] == self.dims[a]).collect();
                    if through.len() != 1 {
                        return Err(Error::InvalidInput(format!("tunnel {k} must span exactly one axis")));
                    }
                    let a = through[0];
                    if (0..3).any(|b| b != a && (h.lo[b] == 0 || h.hi[b] == self.dims[b])) {
                        return Err(Error::InvalidInput(format!("tunnel {k} touches the grid side")));
                    }
                }
            }
        }
        for i in 0..self.holes.len() {
            for j in i + 1..self.holes.len() {
                let (p, q) = (&self.holes[i], &self.holes[j]);
                let gap = (0..3)
                    .map(|a| {
                        if q.lo[a] >= p.hi[a] {
                            (q.lo[a] - p.hi[a]) as isize
                        } else if p.lo[a] >= q.hi[a] {
                            (p.lo[a] - q.hi[a]) as isize
                        } else {
                            -1
                        }
                    })
                    .max()
                    .unwrap();
                if gap < HOLE_SEPARATION as isize {
                    return Err(Error::InvalidInput(format!(
                        "holes {i} and {j} are {gap} cells apart, need at least {HOLE_SEPARATION}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn removed(&self, cell: [usize; 3]) -> bool {
        self.holes
            .iter()
            .any(|h| (0..3).all(|a| cell[a] >= h.lo[a] && cell[a] < h.hi[a]))
    }
}

const KUHN_PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Grid of unit cells, each split into the six Kuhn tetrahedra around its main diagonal.
///
/// Vertices sit at integer coordinates, numbered with x fastest; vertices not used by
/// any tetrahedron are dropped. Tetrahedra are listed cell by cell.
pub fn gen_grid(spec: &GridSpec) -> Result<Complex3> {
    spec.check()?;
    let [a, b, c] = spec.dims;
    let vid = |x: usize, y: usize, z: usize| x + (a + 1) * (y + (b + 1) * z);
    let mut tets = Vec::with_capacity(6 * a * b * c);
    for z in 0..c {
        for y in 0..b {
            for x in 0..a {
                if spec.removed([x, y, z]) {
                    continue;
                }
                for path in KUHN_PATHS {
                    let mut p = [x, y, z];
                    let mut t = [vid(x, y, z); 4];
                    for (k, &axis) in path.iter().enumerate() {
                        p[axis] += 1;
                        t[k + 1] = vid(p[0], p[1], p[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }
    let nv = (a + 1) * (b + 1) * (c + 1);
    let mut used = vec![false; nv];
    for t in &tets {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; nv];
    let mut coords = Vec::new();
    for z in 0..=c {
        for y in 0..=b {
            for x in 0..=a {
                let v = vid(x, y, z);
                if used[v] {
                    remap[v] = coords.len();
                    coords.push([x as f64, y as f64, z as f64]);
                }
            }
        }
    }
    for t in &mut tets {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    build_complex(&tets, &coords, None)
}

/// Rotates all vertex coordinates by `angle` radians about the z axis.
pub fn rotate_z(c: &Complex3, angle: f64) -> Complex3 {
    let (s, co) = angle.sin_cos();
    let mut out = c.clone();
    for p in &mut out.vertices {
        let [x, y, z] = *p;
        *p = [co * x - s * y, s * x + co * y, z];
    }
    out
}

pub fn translate(c: &Complex3, d: Point) -> Complex3 {
    let mut out = c.clone();
    for p in &mut out.vertices {
        for k in 0..3 {
            p[k] += d[k];
        }
    }
    out
}

/// Replaces all weights by independent uniform draws from `[lo, hi]`.
pub fn random_weights(c: &Complex3, lo: f64, hi: f64, seed: u64) -> Complex3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| (0..n).map(|_| rng.random_range(lo..=hi)).collect::<Vec<f64>>();
    let w = Weights {
        w0: draw(c.num_vertices()),
        w1: draw(c.num_edges()),
        w2: draw(c.num_triangles()),
        w3: draw(c.num_tets()),
    };
    c.clone().with_weights(w).expect("lengths match by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub tets: usize,
    pub max_aspect_ratio: f64,
    pub exterior_vertices: usize,
    pub exterior_edges: usize,
    pub exterior_triangles: usize,
    pub boundary_components: usize,
    /// Exterior triangle count of each boundary component, largest first.
    pub boundary_component_sizes: Vec<usize>,
    /// 1-skeleton diameter of each boundary component, in the same order.
    pub boundary_component_diameters: Vec<usize>,
    pub max_tets_per_vertex: usize,
}

/// Boundary components: exterior triangles grouped under shared-edge adjacency,
/// sorted by size, largest first (ties by smallest triangle index).
pub fn boundary_components(c: &Complex3) -> Vec<Vec<usize>> {
    let ext: Vec<usize> = (0..c.num_triangles()).filter(|&f| c.exterior_triangle[f]).collect();
    let mut by_edge: Vec<Vec<usize>> = vec![Vec::new(); c.num_edges()];
    for &f in &ext {
        for &e in &c.triangle_edges[f] {
            by_edge[e].push(f);
        }
    }
    let mut seen = vec![false; c.num_triangles()];
    let mut comps = Vec::new();
    for &f0 in &ext {
        if seen[f0] {
            continue;
        }
        seen[f0] = true;
        let mut comp = vec![f0];
        let mut q = VecDeque::from([f0]);
        while let Some(f) = q.pop_front() {
            for &e in &c.triangle_edges[f] {
                for &g in &by_edge[e] {
                    if !seen[g] {
                        seen[g] = true;
                        comp.push(g);
                        q.push_back(g);
                    }
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|x, y| y.len().cmp(&x.len()).then(x[0].cmp(&y[0])));
    comps
}

/// Exact 1-skeleton diameter of the vertex set of a group of triangles.
pub fn skeleton_diameter(c: &Complex3, tris: &[usize]) -> usize {
    let mut verts: Vec<usize> = tris.iter().flat_map(|&f| c.triangles[f]).collect();
    verts.sort_unstable();
    verts.dedup();
    let local = |v: usize| verts.binary_search(&v).ok();
    let mut adj = vec![Vec::new(); verts.len()];
    for &f in tris {
        for &e in &c.triangle_edges[f] {
            let [x, y] = c.edges[e];
            let (i, j) = (local(x).unwrap(), local(y).unwrap());
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut best = 0;
    let mut dist = vec![usize::MAX; verts.len()];
    for s in 0..verts.len() {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    best = best.max(dist[w]);
                    q.push_back(w);
                }
            }
        }
    }
    best
}

pub fn mesh_stats(c: &Complex3) -> MeshStats {
    let comps = boundary_components(c);
    let max_aspect_ratio = (0..c.num_tets())
        .filter_map(|t| aspect_ratio(c, t).ok())
        .fold(0.0, f64::max);
    let max_tets_per_vertex = c.vertex_tets().iter().map(Vec::len).max().unwrap_or(0);
    MeshStats {
        vertices: c.num_vertices(),
        edges: c.num_edges(),
        triangles: c.num_triangles(),
        tets: c.num_tets(),
        max_aspect_ratio,
        exterior_vertices: c.exterior_vertex.iter().filter(|&&x| x).count(),
        exterior_edges: c.exterior_edge.iter().filter(|&&x| x).count(),
        exterior_triangles: c.exterior_triangle.iter().filter(|&&x| x).count(),
        boundary_components: comps.len(),
        boundary_component_sizes: comps.iter().map(Vec::len).collect(),
        boundary_component_diameters: comps.iter().map(|t| skeleton_diameter(c, t)).collect(),
        max_tets_per_vertex,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::validate;

    #[test]
    fn unit_cell_counts() {
        let c = gen_grid(&GridSpec::solid(1, 1, 1)).unwrap();
        assert_eq!((c.num_tets(), c.num_vertices(), c.num_edges(), c.num_triangles()), (6, 8, 19, 18));
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn cavity_adds_a_boundary_component() {
        let solid = gen_grid(&GridSpec::solid(4, 4, 4)).unwrap();
        assert_eq!(mesh_stats(&solid).boundary_components, 1);
        let spec = GridSpec::solid(4, 4, 4).with_hole([1, 1, 1], [2, 2, 2], HoleKind::Cavity);
        let c = gen_grid(&spec).unwrap();
        let s = mesh_stats(&c);
        assert_eq!(s.boundary_components, 2);
        assert_eq!(s.boundary_component_sizes[1], 12);
    }

    #[test]
    fn tunnel_keeps_one_boundary_component() {
        let spec = GridSpec::solid(4, 4, 4).with_hole([1, 1, 0], [2, 2, 4], HoleKind::Tunnel);
        let c = gen_grid(&spec).unwrap();
        assert_eq!(mesh_stats(&c).boundary_components, 1);
    }

    #[test]
    fn spec_checks() {
        let bad = GridSpec::solid(4, 4, 4).with_hole([0, 1, 1], [1, 2, 2], HoleKind::Cavity);
        assert!(gen_grid(&bad).is_err());
        let close = GridSpec::solid(20, 8, 8)
            .with_hole([2, 2, 2], [3, 3, 3], HoleKind::Cavity)
            .with_hole([6, 2, 2], [7, 3, 3], HoleKind::Cavity);
        assert!(gen_grid(&close).is_err());
        let out = GridSpec::solid(4, 4, 4).with_hole([1, 1, 1], [2, 2, 5], HoleKind::Cavity);
        assert!(gen_grid(&out).is_err());
    }

    #[test]
    fn large_cavity_drops_unused_vertices() {
        let spec = GridSpec::solid(5, 5, 5).with_hole([1, 1, 1], [4, 4, 4], HoleKind::Cavity);
        let c = gen_grid(&spec).unwrap();
        assert_eq!(c.num_vertices(), 216 - 8);
        assert!(validate(&c).is_empty());
    }
}
