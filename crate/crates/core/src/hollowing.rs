//! r-hollowings: plane-based division of a complex into regions separated by
//! boundary layers, the sphere variant, and validation.
//!
//! Sizes are counted in vertices, and `r` uses the same unit. On the generated
//! grids a vertex stands for one unit cell, so a region of parameter `r` spans
//! about `r^{1/3}` cells per axis.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::complex::{tet_volume, Complex3, Point};
use crate::error::{Error, Result};
use crate::mesh_gen::boundary_components;

/// Configurable constants of the hollowing invariants.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HollowingConstants {
    /// Region size bound `C_r·r`.
    pub c_r: f64,
    /// Boundary size bound `C_b·r^{2/3}`. A width-5 wall is two cells thick on
    /// Kuhn grids, so a region of side `s` has about `24·s²` boundary vertices.
    pub c_b: f64,
    /// Boundary triangle diameter bound `C_d·r^{1/3}`.
    pub c_d: f64,
    /// Minimum shell width in triangle distance.
    pub min_width: usize,
    /// Triangle distance defining "near a boundary component".
    pub near: usize,
    /// Minimum 1-skeleton distance between boundary components.
    pub min_separation: usize,
}

impl Default for HollowingConstants {
    fn default() -> Self {
        Self { c_r: 4.0, c_b: 40.0, c_d: 8.0, min_width: 5, near: 2, min_separation: 6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HollowingKind {
    Shell,
    Sphere,
}

/// Division of a complex into regions.
///
/// Every class vector holds `Some(region)` for interior simplexes and `None` for
/// boundary simplexes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hollowing {
    pub kind: HollowingKind,
    pub r: f64,
    pub num_regions: usize,
    /// Owning region of each tetrahedron (boundary tetrahedra included).
    pub tet_region: Vec<usize>,
    /// Whether each tetrahedron belongs to the boundary layer.
    pub tet_boundary: Vec<bool>,
    pub vertex_class: Vec<Option<usize>>,
    pub edge_class: Vec<Option<usize>>,
    pub triangle_class: Vec<Option<usize>>,
    /// Boundary triangles surrounding each region.
    pub shells: Vec<Vec<usize>>,
}

/// Region sizes and boundary size accounting reported with a hollowing.
#[derive(Clone, Debug, Default, Serialize)]
pub struct HollowingStats {
    pub regions: usize,
    pub region_vertices: Vec<usize>,
    pub boundary_vertices: Vec<usize>,
    pub shell_widths: Vec<Option<usize>>,
    /// Triangle diameter estimate of each region boundary.
    pub diameters: Vec<usize>,
    pub boundary_triangles: usize,
    /// `boundary_triangles / (n · r^{-1/3})` with `n` the simplex count.
    pub boundary_constant: f64,
}

impl Hollowing {
    /// Boundary edges, in index order.
    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.edge_class.len()).filter(|&e| self.edge_class[e].is_none()).collect()
    }

    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.edge_class.len()).filter(|&e| self.edge_class[e].is_some()).collect()
    }

    /// Interior edges grouped by region.
    pub fn region_edges(&self) -> Vec<Vec<usize>> {
        group(&self.edge_class, self.num_regions)
    }

    pub fn boundary_triangles(&self) -> Vec<usize> {
        (0..self.triangle_class.len()).filter(|&f| self.triangle_class[f].is_none()).collect()
    }

    pub fn interior_triangles(&self) -> Vec<usize> {
        (0..self.triangle_class.len()).filter(|&f| self.triangle_class[f].is_some()).collect()
    }

    pub fn region_triangles(&self) -> Vec<Vec<usize>> {
        group(&self.triangle_class, self.num_regions)
    }

    /// Errors unless the class vectors match the complex.
    pub fn check_matches(&self, c: &Complex3) -> Result<()> {
        let ok = self.vertex_class.len() == c.num_vertices()
            && self.edge_class.len() == c.num_edges()
            && self.triangle_class.len() == c.num_triangles()
            && self.tet_region.len() == c.num_tets()
            && self.tet_boundary.len() == c.num_tets();
        if !ok {
            return Err(Error::IndexMismatch(format!(
                "hollowing sized for ({}, {}, {}, {}) simplexes, complex has ({}, {}, {}, {})",
                self.vertex_class.len(),
                self.edge_class.len(),
                self.triangle_class.len(),
                self.tet_region.len(),
                c.num_vertices(),
                c.num_edges(),
                c.num_triangles(),
                c.num_tets()
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

fn group(class: &[Option<usize>], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, c) in class.iter().enumerate() {
        if let Some(r) = c {
            out[*r].push(i);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bounding box

/// Box in a rotated frame: `rotation` rows are the box axes.
#[derive(Clone, Debug, Serialize)]
pub struct BoundingBox {
    pub rotation: [[f64; 3]; 3],
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub volume: f64,
    /// Total tetrahedron volume of the complex.
    pub mesh_volume: f64,
    /// `volume / mesh_volume`.
    pub ratio: f64,
}

impl BoundingBox {
    pub fn to_frame(&self, p: &Point) -> Point {
        let r = &self.rotation;
        [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2])
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.hi[i] - self.lo[i])
    }
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn frame_extent(rot: &[[f64; 3]; 3], pts: &[Point]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for i in 0..3 {
            let x = rot[i][0] * p[0] + rot[i][1] * p[1] + rot[i][2] * p[2];
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    (lo, hi)
}

fn axis_rotation(axis: usize, th: f64) -> [[f64; 3]; 3] {
    let (s, c) = th.sin_cos();
    let (i, j) = [(1, 2), (2, 0), (0, 1)][axis];
    let mut r = IDENTITY;
    r[i][i] = c;
    r[i][j] = s;
    r[j][i] = -s;
    r[j][j] = c;
    r
}

fn pca_rotation(pts: &[Point]) -> Option<[[f64; 3]; 3]> {
    let n = pts.len() as f64;
    let mean = crate::complex::centroid(pts);
    let mut cov = Matrix3::<f64>::zeros();
    for p in pts {
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += (p[i] - mean[i]) * (p[j] - mean[j]) / n;
            }
        }
    }
    let e = SymmetricEigen::new(cov);
    let v = e.eigenvectors;
    let rot: [[f64; 3]; 3] = [0, 1, 2].map(|k| [v[(0, k)], v[(1, k)], v[(2, k)]]);
    rot.iter().flatten().all(|x| x.is_finite()).then_some(rot)
}

/// Smallest box among the axis-aligned box, the principal-axes box and boxes
/// rotated about each coordinate axis, if `rotate` is set.
pub fn nice_bounding_box(c: &Complex3, rotate: bool) -> BoundingBox {
    let pts = &c.vertices;
    let mut candidates = vec![IDENTITY];
    if rotate {
        candidates.extend(pca_rotation(pts));
        let steps = 32;
        for axis in 0..3 {
            for k in 1..steps {
                candidates.push(axis_rotation(axis, std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64));
            }
        }
    }
    // (rotation, lo, hi, volume)
    type Frame = ([[f64; 3]; 3], [f64; 3], [f64; 3], f64);
    let mut best: Option<Frame> = None;
    for rot in candidates {
        let (lo, hi) = frame_extent(&rot, pts);
        let vol = (0..3).map(|i| hi[i] - lo[i]).product::<f64>();
        if best.as_ref().is_none_or(|b| vol < b.3 * (1.0 - 1e-9)) {
            best = Some((rot, lo, hi, vol));
        }
    }
    let (rotation, lo, hi, volume) = best.expect("at least the identity candidate");
    let mesh_volume: f64 = c.tets.iter().map(|t| tet_volume(&t.map(|v| pts[v]))).sum();
    BoundingBox { rotation, lo, hi, volume, mesh_volume, ratio: volume / mesh_volume }
}

// ---------------------------------------------------------------------------
// Cutting planes

/// Axis-parallel cutting planes in the box frame, sorted per axis.
#[derive(Clone, Debug, Default)]
pub struct Planes {
    pub coords: [Vec<f64>; 3],
}

impl Planes {
    pub fn is_empty(&self) -> bool {
        self.coords.iter().all(Vec::is_empty)
    }

    pub fn count(&self) -> usize {
        self.coords.iter().map(Vec::len).sum()
    }

    /// Cell index of a frame point.
    pub fn cell(&self, p: &Point) -> [usize; 3] {
        [0, 1, 2].map(|a| self.coords[a].partition_point(|&c| c < p[a]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..3).flat_map(move |a| self.coords[a].iter().map(move |&c| (a, c)))
    }
}

fn axis_levels(frame: &[Point], axis: usize) -> Vec<f64> {
    let mut v: Vec<f64> = frame.iter().map(|p| p[axis]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    v
}

/// Evenly spaced planes, `⌊L_a / h⌋` per axis with `h = (vol · r / n_v)^{1/3}`.
///
/// Each plane moves to the nearest vertex level and, unless `snap` is set, then
/// half the smallest level gap past it.
fn cutting_planes(bbox: &BoundingBox, frame: &[Point], r: f64, snap: bool) -> Planes {
    let nv = frame.len() as f64;
    let len = bbox.lengths();
    let vol: f64 = len.iter().filter(|&&l| l > 0.0).product();
    let h = (vol * r / nv).cbrt();
    let mut planes = Planes::default();
    for a in 0..3 {
        if len[a] <= 0.0 {
            continue;
        }
        let k = (len[a] / h).floor() as usize;
        if k == 0 {
            continue;
        }
        let levels = axis_levels(frame, a);
        let gap = levels.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let pieces = k + 1;
        let mut cs = Vec::new();
        for j in 1..pieces {
            let x = bbox.lo[a] + len[a] * j as f64 / pieces as f64;
            let i = levels.partition_point(|&l| l < x);
            let nearest = [i.checked_sub(1), (i < levels.len()).then_some(i)]
                .into_iter()
                .flatten()
                .min_by(|&p, &q| (levels[p] - x).abs().total_cmp(&(levels[q] - x).abs()))
                .unwrap();
            let c = if snap { levels[nearest] } else { levels[nearest] + 0.5 * gap };
            if c > bbox.lo[a] && c < bbox.hi[a] && !cs.iter().any(|&d: &f64| (d - c).abs() < 1e-12) {
                cs.push(c);
            }
        }
        cs.sort_by(f64::total_cmp);
        planes.coords[a] = cs;
    }
    planes
}

// ---------------------------------------------------------------------------
// Incidence helpers

pub(crate) struct Incidence {
    pub edge_tris: Vec<Vec<usize>>,
    pub tet_edges: Vec<[usize; 6]>,
    /// Boundary component of each exterior triangle, `usize::MAX` otherwise.
    pub ext_comp: Vec<usize>,
}

impl Incidence {
    pub(crate) fn new(c: &Complex3) -> Self {
        let edge_tris = c.edge_triangles();
        let tet_edges = c
            .tets
            .iter()
            .map(|t| {
                let mut es = [0; 6];
                let mut k = 0;
                for i in 0..4 {
                    for j in i + 1..4 {
                        es[k] = c.edge_id(t[i], t[j]).expect("tet edge exists");
                        k += 1;
                    }
                }
                es
            })
            .collect();
        let mut ext_comp = vec![usize::MAX; c.num_triangles()];
        for (k, comp) in boundary_components(c).iter().enumerate() {
            for &f in comp {
                ext_comp[f] = k;
            }
        }
        Self { edge_tris, tet_edges, ext_comp }
    }
}

/// Tetrahedra containing a triangle within triangle distance `depth` of `seeds`.
fn near_tets(c: &Complex3, inc: &Incidence, seeds: &[usize], depth: usize) -> Vec<usize> {
    let mut dist = HashMap::new();
    let mut q = VecDeque::new();
    for &f in seeds {
        dist.insert(f, 0usize);
        q.push_back(f);
    }
    while let Some(f) = q.pop_front() {
        let d = dist[&f];
        if d == depth {
            continue;
        }
        for &e in &c.triangle_edges[f] {
            for &g in &inc.edge_tris[e] {
                if let std::collections::hash_map::Entry::Vacant(v) = dist.entry(g) {
                    v.insert(d + 1);
                    q.push_back(g);
                }
            }
        }
    }
    let mut tets: Vec<usize> = dist.keys().flat_map(|&f| c.triangle_tets[f].iter().copied()).collect();
    tets.sort_unstable();
    tets.dedup();
    tets
}

/// Smallest 1-skeleton distance between vertices of distinct boundary components.
pub fn boundary_separation(c: &Complex3) -> Option<usize> {
    let comps = boundary_components(c);
    if comps.len() < 2 {
        return None;
    }
    let mut owner = vec![usize::MAX; c.num_vertices()];
    let mut dist = vec![usize::MAX; c.num_vertices()];
    let mut q = VecDeque::new();
    for (k, comp) in comps.iter().enumerate() {
        for &f in comp {
            for v in c.triangles[f] {
                if owner[v] == usize::MAX {
                    owner[v] = k;
                    dist[v] = 0;
                    q.push_back(v);
                } else if owner[v] != k {
                    return Some(0);
                }
            }
        }
    }
    let adj = c.vertex_edges();
    let mut best = usize::MAX;
    while let Some(v) = q.pop_front() {
        for &e in &adj[v] {
            let [a, b] = c.edges[e];
            let w = if a == v { b } else { a };
            if owner[w] == usize::MAX {
                owner[w] = owner[v];
                dist[w] = dist[v] + 1;
                q.push_back(w);
            } else if owner[w] != owner[v] {
                best = best.min(dist[v] + dist[w] + 1);
            }
        }
    }
    Some(best)
}

fn check_boundary_structure(c: &Complex3, k: &HollowingConstants) -> Result<()> {
    if let Some(d) = boundary_separation(c) {
        if d < k.min_separation {
            return Err(Error::UnsupportedGeometry(format!(
                "boundary components at 1-skeleton distance {d}, need at least {}",
                k.min_separation
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Construction from a set of boundary tetrahedra

/// Components of the non-boundary tetrahedra under shared-triangle adjacency.
fn interior_components(c: &Complex3, in_t: &[bool]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; c.num_tets()];
    let mut k = 0;
    let mut q = VecDeque::new();
    for s in 0..c.num_tets() {
        if in_t[s] || comp[s] != usize::MAX {
            continue;
        }
        comp[s] = k;
        q.push_back(s);
        while let Some(t) = q.pop_front() {
            for &f in &c.tet_triangles[t] {
                for &u in &c.triangle_tets[f] {
                    if !in_t[u] && comp[u] == usize::MAX {
                        comp[u] = k;
                        q.push_back(u);
                    }
                }
            }
        }
        k += 1;
    }
    (comp, k)
}

/// Restriction applied when collecting a region's shell.
struct CellWindow<'a> {
    planes: &'a Planes,
    frame: Vec<Point>,
    /// Distance a shell may reach below the lower and above the upper plane of
    /// its cell.
    below: f64,
    above: f64,
}

impl CellWindow<'_> {
    fn bounds(&self, cell: [usize; 3]) -> [(f64, f64); 3] {
        [0, 1, 2].map(|a| {
            let cs = &self.planes.coords[a];
            let lo = if cell[a] == 0 { f64::NEG_INFINITY } else { cs[cell[a] - 1] - self.below };
            let hi = if cell[a] == cs.len() { f64::INFINITY } else { cs[cell[a]] + self.above };
            (lo, hi)
        })
    }
}

/// Boundary tetrahedra connected to the region through boundary tetrahedra,
/// optionally restricted to an expanded plane cell.
fn collect_shell(
    c: &Complex3,
    in_t: &[bool],
    members: &[usize],
    window: Option<(&CellWindow, [(f64, f64); 3])>,
    mark: &mut [bool],
) -> Vec<usize> {
    let allowed = |t: usize| match &window {
        None => true,
        Some((w, b)) => {
            let p = w.frame[t];
            (0..3).all(|a| p[a] >= b[a].0 && p[a] <= b[a].1)
        }
    };
    let mut shell = Vec::new();
    let mut q = VecDeque::new();
    for &t in members {
        for &f in &c.tet_triangles[t] {
            for &u in &c.triangle_tets[f] {
                if in_t[u] && !mark[u] && allowed(u) {
                    mark[u] = true;
                    shell.push(u);
                    q.push_back(u);
                }
            }
        }
    }
    while let Some(t) = q.pop_front() {
        for &f in &c.tet_triangles[t] {
            for &u in &c.triangle_tets[f] {
                if in_t[u] && !mark[u] && allowed(u) {
                    mark[u] = true;
                    shell.push(u);
                    q.push_back(u);
                }
            }
        }
    }
    for &t in &shell {
        mark[t] = false;
    }
    shell.sort_unstable();
    shell
}

/// Boundary components met by exterior triangles of the given tetrahedra.
fn touched_components(c: &Complex3, inc: &Incidence, tets: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out: Vec<usize> = tets
        .flat_map(|t| c.tet_triangles[t])
        .filter_map(|f| (inc.ext_comp[f] != usize::MAX).then_some(inc.ext_comp[f]))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Shell width: triangle distance from the inner sphere to the outer sphere.
///
/// The inner sphere is the set of shell triangles facing the region interior. The
/// outer sphere is the set of shell triangles facing other tetrahedra, or lying on
/// a boundary component that the region interior does not reach.
fn shell_width(
    c: &Complex3,
    inc: &Incidence,
    shell_tris: &[usize],
    in_shell_tet: &dyn Fn(usize) -> bool,
    in_region: &dyn Fn(usize) -> bool,
    open: &[usize],
) -> Option<usize> {
    let set: HashMap<usize, ()> = shell_tris.iter().map(|&f| (f, ())).collect();
    let mut dist: HashMap<usize, usize> = HashMap::new();
    let mut q = VecDeque::new();
    let mut outer = HashMap::new();
    for &f in shell_tris {
        let tets = &c.triangle_tets[f];
        let inner = tets.iter().any(|&t| in_region(t));
        let hole = inc.ext_comp[f];
        let is_outer = (hole != usize::MAX && !open.contains(&hole)) || tets.iter().any(|&t| !in_region(t) && !in_shell_tet(t));
        if inner && !is_outer {
            dist.insert(f, 0);
            q.push_back(f);
        }
        if is_outer {
            outer.insert(f, ());
        }
    }
    if dist.is_empty() {
        return None;
    }
    while let Some(f) = q.pop_front() {
        let d = dist[&f];
        for &e in &c.triangle_edges[f] {
            for &g in &inc.edge_tris[e] {
                if set.contains_key(&g) && !dist.contains_key(&g) {
                    if outer.contains_key(&g) {
                        return Some(d + 1);
                    }
                    dist.insert(g, d + 1);
                    q.push_back(g);
                }
            }
        }
    }
    None
}

struct Layout {
    tet_region: Vec<usize>,
    regions: usize,
    shells: Vec<Vec<usize>>,
    widths: Vec<Option<usize>>,
}

fn layout(c: &Complex3, inc: &Incidence, in_t: &[bool], window: Option<&CellWindow>) -> Layout {
    let (comp, k) = interior_components(c, in_t);
    let mut members = vec![Vec::new(); k];
    for (t, &r) in comp.iter().enumerate() {
        if r != usize::MAX {
            members[r].push(t);
        }
    }
    let mut mark = vec![false; c.num_tets()];
    let mut shells = Vec::with_capacity(k);
    let mut widths = Vec::with_capacity(k);
    for r in 0..k {
        let w = window.map(|w| {
            let mut votes: HashMap<[usize; 3], usize> = HashMap::new();
            for &t in &members[r] {
                *votes.entry(w.planes.cell(&w.frame[t])).or_default() += 1;
            }
            let cell = votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).unwrap().0;
            (w, w.bounds(cell))
        });
        let shell_tets = collect_shell(c, in_t, &members[r], w, &mut mark);
        for &t in &shell_tets {
            mark[t] = true;
        }
        let mut tris: Vec<usize> = shell_tets.iter().flat_map(|&t| c.tet_triangles[t]).collect();
        tris.sort_unstable();
        tris.dedup();
        let open = touched_components(c, inc, members[r].iter().copied());
        let width = shell_width(c, inc, &tris, &|t| mark[t], &|t| comp[t] == r, &open);
        for &t in &shell_tets {
            mark[t] = false;
        }
        shells.push((shell_tets, tris));
        widths.push(width);
    }
    // Each boundary tetrahedron belongs to the nearest region interior.
    let mut tet_region = comp.clone();
    let mut q: VecDeque<usize> = (0..c.num_tets()).filter(|&t| tet_region[t] != usize::MAX).collect();
    while let Some(t) = q.pop_front() {
        for &f in &c.tet_triangles[t] {
            for &u in &c.triangle_tets[f] {
                if tet_region[u] == usize::MAX {
                    tet_region[u] = tet_region[t];
                    q.push_back(u);
                }
            }
        }
    }
    for r in tet_region.iter_mut() {
        if *r == usize::MAX {
            *r = 0;
        }
    }
    let shells = shells.into_iter().map(|s| s.1).collect();
    Layout { tet_region, regions: k, shells, widths }
}

/// Vertex, edge and triangle classes.
type Classes = (Vec<Option<usize>>, Vec<Option<usize>>, Vec<Option<usize>>);

fn classes_from_boundary_tets(c: &Complex3, inc: &Incidence, in_t: &[bool], comp: &[usize]) -> Classes {
    let mut vc = vec![None; c.num_vertices()];
    let mut ec = vec![None; c.num_edges()];
    let mut fc = vec![None; c.num_triangles()];
    let mut vb = vec![false; c.num_vertices()];
    let mut eb = vec![false; c.num_edges()];
    let mut fb = vec![false; c.num_triangles()];
    for t in 0..c.num_tets() {
        if in_t[t] {
            c.tets[t].iter().for_each(|&v| vb[v] = true);
            inc.tet_edges[t].iter().for_each(|&e| eb[e] = true);
            c.tet_triangles[t].iter().for_each(|&f| fb[f] = true);
        }
    }
    for t in 0..c.num_tets() {
        if in_t[t] {
            continue;
        }
        let r = Some(comp[t]);
        c.tets[t].iter().filter(|&&v| !vb[v]).for_each(|&v| vc[v] = r);
        inc.tet_edges[t].iter().filter(|&&e| !eb[e]).for_each(|&e| ec[e] = r);
        c.tet_triangles[t].iter().filter(|&&f| !fb[f]).for_each(|&f| fc[f] = r);
    }
    (vc, ec, fc)
}

impl Hollowing {
    /// Hollowing whose boundary is the closure of the marked tetrahedra.
    ///
    /// Regions are the components of the remaining tetrahedra; each shell holds the
    /// boundary tetrahedra connected to its region through boundary tetrahedra.
    pub fn from_boundary_tets(c: &Complex3, r: f64, in_t: &[bool]) -> Result<Self> {
        if in_t.len() != c.num_tets() {
            return Err(Error::IndexMismatch("boundary flags do not match tetrahedra".into()));
        }
        let inc = Incidence::new(c);
        Ok(Self::assemble(c, &inc, r, in_t, None).0)
    }

    fn assemble(c: &Complex3, inc: &Incidence, r: f64, in_t: &[bool], window: Option<&CellWindow>) -> (Self, Vec<Option<usize>>) {
        let lay = layout(c, inc, in_t, window);
        let (comp, _) = interior_components(c, in_t);
        let (vc, ec, fc) = classes_from_boundary_tets(c, inc, in_t, &comp);
        let h = Hollowing {
            kind: HollowingKind::Shell,
            r,
            num_regions: lay.regions,
            tet_region: lay.tet_region,
            tet_boundary: in_t.to_vec(),
            vertex_class: vc,
            edge_class: ec,
            triangle_class: fc,
            shells: lay.shells,
        };
        (h, lay.widths)
    }

    /// Single region holding everything.
    pub fn trivial(c: &Complex3, r: f64, kind: HollowingKind) -> Self {
        let mut h = Hollowing {
            kind,
            r,
            num_regions: 1,
            tet_region: vec![0; c.num_tets()],
            tet_boundary: vec![false; c.num_tets()],
            vertex_class: vec![Some(0); c.num_vertices()],
            edge_class: vec![Some(0); c.num_edges()],
            triangle_class: vec![Some(0); c.num_triangles()],
            shells: vec![Vec::new()],
        };
        if kind == HollowingKind::Sphere {
            let ext: Vec<usize> = (0..c.num_triangles()).filter(|&f| c.exterior_triangle[f]).collect();
            for &f in &ext {
                h.triangle_class[f] = None;
                for &e in &c.triangle_edges[f] {
                    h.edge_class[e] = None;
                }
                for v in c.triangles[f] {
                    h.vertex_class[v] = None;
                }
            }
            h.shells = vec![ext];
        }
        h
    }
}

/// Options for hollowing construction.
#[derive(Clone, Copy, Debug, Default)]
pub struct HollowingOptions {
    pub constants: HollowingConstants,
    /// Allow a rotated bounding box.
    pub rotate: bool,
}

fn check_r(c: &Complex3, r: f64) -> Result<()> {
    let n = c.num_simplexes() as f64;
    if !(r > 0.0) || r >= n {
        return Err(Error::InvalidInput(format!("hollowing parameter r = {r} must lie in (0, {n})")));
    }
    Ok(())
}

/// Plane-based r-hollowing with shell-shaped region boundaries.
pub fn find_hollowing(c: &Complex3, r: f64) -> Result<Hollowing> {
    find_hollowing_with(c, r, &HollowingOptions::default())
}

pub fn find_hollowing_with(c: &Complex3, r: f64, opts: &HollowingOptions) -> Result<Hollowing> {
    check_r(c, r)?;
    let k = &opts.constants;
    let bbox = nice_bounding_box(c, opts.rotate);
    let vframe: Vec<Point> = c.vertices.iter().map(|p| bbox.to_frame(p)).collect();
    let planes = cutting_planes(&bbox, &vframe, r, false);
    if planes.is_empty() {
        return Ok(Hollowing::trivial(c, r, HollowingKind::Shell));
    }
    check_boundary_structure(c, k)?;
    let inc = Incidence::new(c);
    let comps = boundary_components(c);
    let tet_frame: Vec<Point> = (0..c.num_tets()).map(|t| bbox.to_frame(&c.tet_centroid(t))).collect();
    let tet_range: Vec<[(f64, f64); 3]> = c
        .tets
        .iter()
        .map(|tet| {
            [0, 1, 2].map(|a| tet.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(vframe[v][a]), h.max(vframe[v][a]))))
        })
        .collect();
    // Cavities hit by each plane.
    let crossings: Vec<(usize, f64, usize)> = planes
        .iter()
        .flat_map(|(a, x)| {
            let vframe = &vframe;
            comps.iter().enumerate().skip(1).filter_map(move |(j, comp)| {
                let (lo, hi) = comp
                    .iter()
                    .flat_map(|&f| c.triangles[f])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(vframe[v][a]), h.max(vframe[v][a])));
                (lo < x && x < hi).then_some((a, x, j))
            })
        })
        .collect();
    let cell = bbox.mesh_volume / c.num_tets() as f64 * 6.0;
    let ell = cell.cbrt();
    // Planes sit half a vertex gap past a vertex level, so walls grow on the
    // negative side to stay centred on the unperturbed position. Boundary
    // component layers grow by triangle distance.
    let mut last = None;
    for step in 0..5 {
        let thick = ell * step as f64;
        let depth = k.near + 2 * step;
        let mut in_t = vec![false; c.num_tets()];
        if let Some(outer) = comps.first() {
            for t in near_tets(c, &inc, outer, depth) {
                in_t[t] = true;
            }
        }
        for (a, x) in planes.iter() {
            for (t, rg) in tet_range.iter().enumerate() {
                if rg[a].0 < x && x - thick < rg[a].1 {
                    in_t[t] = true;
                }
            }
        }
        for &(a, x, j) in &crossings {
            for t in near_tets(c, &inc, &comps[j], depth) {
                if tet_frame[t][a] > x {
                    in_t[t] = true;
                }
            }
        }
        let window = CellWindow { planes: &planes, frame: tet_frame.clone(), below: thick + ell, above: ell };
        let (h, widths) = Hollowing::assemble(c, &inc, r, &in_t, Some(&window));
        if h.num_regions == 0 {
            break;
        }
        let done = widths.iter().all(|w| w.is_none_or(|w| w >= k.min_width));
        last = Some(h);
        if done {
            break;
        }
    }
    last.ok_or_else(|| Error::UnsupportedGeometry(format!("no region survives the boundary layers at r = {r}; use a larger r")))
}

/// Plane-based hollowing whose region boundaries are triangulated spheres.
///
/// Planes snap to vertex levels and every tetrahedron joins the region of the cell
/// holding its centroid, so the boundary is made of triangles only.
pub fn sphere_hollowing(c: &Complex3, r: f64) -> Result<Hollowing> {
    sphere_hollowing_with(c, r, &HollowingOptions::default())
}

pub fn sphere_hollowing_with(c: &Complex3, r: f64, opts: &HollowingOptions) -> Result<Hollowing> {
    check_r(c, r)?;
    let bbox = nice_bounding_box(c, opts.rotate);
    let vframe: Vec<Point> = c.vertices.iter().map(|p| bbox.to_frame(p)).collect();
    let planes = cutting_planes(&bbox, &vframe, r, true);
    if planes.is_empty() {
        return Ok(Hollowing::trivial(c, r, HollowingKind::Sphere));
    }
    check_boundary_structure(c, &opts.constants)?;
    let cells: Vec<[usize; 3]> = (0..c.num_tets()).map(|t| planes.cell(&bbox.to_frame(&c.tet_centroid(t)))).collect();
    let mut region = vec![usize::MAX; c.num_tets()];
    let mut k = 0;
    let mut q = VecDeque::new();
    for s in 0..c.num_tets() {
        if region[s] != usize::MAX {
            continue;
        }
        region[s] = k;
        q.push_back(s);
        while let Some(t) = q.pop_front() {
            for &f in &c.tet_triangles[t] {
                for &u in &c.triangle_tets[f] {
                    if region[u] == usize::MAX && cells[u] == cells[t] {
                        region[u] = k;
                        q.push_back(u);
                    }
                }
            }
        }
        k += 1;
    }
    let mut h = Hollowing {
        kind: HollowingKind::Sphere,
        r,
        num_regions: k,
        tet_region: region.clone(),
        tet_boundary: vec![false; c.num_tets()],
        vertex_class: vec![None; c.num_vertices()],
        edge_class: vec![None; c.num_edges()],
        triangle_class: vec![None; c.num_triangles()],
        shells: vec![Vec::new(); k],
    };
    let mut fb = vec![false; c.num_triangles()];
    for f in 0..c.num_triangles() {
        let ts = &c.triangle_tets[f];
        fb[f] = ts.len() == 1 || ts.iter().any(|&t| region[t] != region[ts[0]]);
        if fb[f] {
            for &t in ts {
                h.shells[region[t]].push(f);
            }
        }
    }
    for s in &mut h.shells {
        s.sort_unstable();
        s.dedup();
    }
    let mut eb = vec![false; c.num_edges()];
    let mut vb = vec![false; c.num_vertices()];
    for f in (0..c.num_triangles()).filter(|&f| fb[f]) {
        c.triangle_edges[f].iter().for_each(|&e| eb[e] = true);
        c.triangles[f].iter().for_each(|&v| vb[v] = true);
    }
    let inc = Incidence::new(c);
    for t in 0..c.num_tets() {
        let rg = Some(region[t]);
        c.tets[t].iter().filter(|&&v| !vb[v]).for_each(|&v| h.vertex_class[v] = rg);
        inc.tet_edges[t].iter().filter(|&&e| !eb[e]).for_each(|&e| h.edge_class[e] = rg);
        c.tet_triangles[t].iter().filter(|&&f| !fb[f]).for_each(|&f| h.triangle_class[f] = rg);
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// Validation

/// Euler characteristic `V − E + F` of the closure of a triangle set.
pub fn euler_characteristic(c: &Complex3, tris: &[usize]) -> i64 {
    let mut vs: Vec<usize> = tris.iter().flat_map(|&f| c.triangles[f]).collect();
    let mut es: Vec<usize> = tris.iter().flat_map(|&f| c.triangle_edges[f]).collect();
    let mut fs = tris.to_vec();
    for v in [&mut vs, &mut es, &mut fs] {
        v.sort_unstable();
        v.dedup();
    }
    vs.len() as i64 - es.len() as i64 + fs.len() as i64
}

/// Triangles shared by the shells of two regions.
pub fn shell_intersection(h: &Hollowing, a: usize, b: usize) -> Vec<usize> {
    let sb = &h.shells[b];
    h.shells[a].iter().copied().filter(|f| sb.binary_search(f).is_ok()).collect()
}

/// Triangle diameter of a triangle set, by a double BFS sweep.
pub fn triangle_diameter(c: &Complex3, tris: &[usize]) -> usize {
    if tris.is_empty() {
        return 0;
    }
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &f) in tris.iter().enumerate() {
        for &e in &c.triangle_edges[f] {
            by_edge.entry(e).or_default().push(i);
        }
    }
    let bfs = |s: usize| -> (usize, usize) {
        let mut dist = vec![usize::MAX; tris.len()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        let mut far = (s, 0);
        while let Some(i) = q.pop_front() {
            for &e in &c.triangle_edges[tris[i]] {
                for &j in &by_edge[&e] {
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        if dist[j] > far.1 {
                            far = (j, dist[j]);
                        }
                        q.push_back(j);
                    }
                }
            }
        }
        far
    };
    let (far, _) = bfs(0);
    bfs(far).1
}

/// Measured quantities of a hollowing.
pub fn hollowing_stats(c: &Complex3, h: &Hollowing) -> HollowingStats {
    let inc = Incidence::new(c);
    let k = h.num_regions;
    let mut region_vertices = vec![0; k];
    let mut boundary_vertices = vec![0; k];
    let mut shell_widths = vec![None; k];
    let tets_of: Vec<Vec<usize>> = {
        let mut g = vec![Vec::new(); k];
        for (t, &r) in h.tet_region.iter().enumerate() {
            if r < k {
                g[r].push(t);
            }
        }
        g
    };
    for r in 0..k {
        let shell_set: std::collections::HashSet<usize> = h.shells[r].iter().copied().collect();
        let shell_tet = |t: usize| h.tet_boundary[t] && c.tet_triangles[t].iter().all(|f| shell_set.contains(f));
        let interior = |t: usize| !h.tet_boundary[t] && h.tet_region[t] == r;
        let mut verts: Vec<usize> = tets_of[r].iter().flat_map(|&t| c.tets[t]).collect();
        verts.sort_unstable();
        verts.dedup();
        region_vertices[r] = verts.len();
        let mut bverts: Vec<usize> = h.shells[r].iter().flat_map(|&f| c.triangles[f]).collect();
        bverts.sort_unstable();
        bverts.dedup();
        boundary_vertices[r] = bverts.len();
        if h.kind == HollowingKind::Shell {
            let open = touched_components(c, &inc, tets_of[r].iter().copied().filter(|&t| interior(t)));
            shell_widths[r] = shell_width(c, &inc, &h.shells[r], &shell_tet, &interior, &open);
        }
    }
    let boundary_triangles = h.triangle_class.iter().filter(|x| x.is_none()).count();
    let n = c.num_simplexes() as f64;
    HollowingStats {
        regions: k,
        region_vertices,
        boundary_vertices,
        shell_widths,
        diameters: h.shells.iter().map(|s| triangle_diameter(c, s)).collect(),
        boundary_triangles,
        boundary_constant: boundary_triangles as f64 / (n * h.r.powf(-1.0 / 3.0)),
    }
}

/// Checks every hollowing invariant; returns one message per violation.
pub fn validate_hollowing(c: &Complex3, h: &Hollowing, k: &HollowingConstants) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = h.check_matches(c) {
        out.push(e.to_string());
        return out;
    }
    // Interior simplexes of distinct regions share no subsimplex.
    for (f, es) in c.triangle_edges.iter().enumerate() {
        let regs: Vec<usize> = es.iter().filter_map(|&e| h.edge_class[e]).collect();
        if regs.windows(2).any(|w| w[0] != w[1]) || regs.iter().zip(h.triangle_class[f]).any(|(a, b)| *a != b && h.triangle_class[f].is_some()) {
            out.push(format!("△-disjoint: triangle {f} has interior edges of regions {regs:?}"));
        }
    }
    for (e, &[a, b]) in c.edges.iter().enumerate() {
        let mut regs: Vec<usize> = [h.vertex_class[a], h.vertex_class[b]].into_iter().flatten().collect();
        regs.extend(h.edge_class[e]);
        if regs.windows(2).any(|w| w[0] != w[1]) {
            out.push(format!("△-disjoint: edge {e} joins interior simplexes of regions {regs:?}"));
        }
    }
    // The boundary is closed under taking faces.
    for (f, es) in c.triangle_edges.iter().enumerate() {
        if h.triangle_class[f].is_none() && es.iter().any(|&e| h.edge_class[e].is_some()) {
            out.push(format!("closure: boundary triangle {f} has an interior edge"));
        }
    }
    for (e, &[a, b]) in c.edges.iter().enumerate() {
        if h.edge_class[e].is_none() && (h.vertex_class[a].is_some() || h.vertex_class[b].is_some()) {
            out.push(format!("closure: boundary edge {e} has an interior vertex"));
        }
    }
    if h.shells.len() != h.num_regions {
        out.push(format!("shell count {} differs from region count {}", h.shells.len(), h.num_regions));
        return out;
    }
    let stats = hollowing_stats(c, h);
    let r = h.r;
    for reg in 0..h.num_regions {
        if stats.region_vertices[reg] as f64 > k.c_r * r {
            out.push(format!("region size: region {reg} has {} vertices > {:.1}", stats.region_vertices[reg], k.c_r * r));
        }
        if stats.boundary_vertices[reg] as f64 > k.c_b * r.powf(2.0 / 3.0) {
            out.push(format!(
                "boundary size: region {reg} has {} boundary vertices > {:.1}",
                stats.boundary_vertices[reg],
                k.c_b * r.powf(2.0 / 3.0)
            ));
        }
        if h.kind == HollowingKind::Shell {
            if let Some(w) = stats.shell_widths[reg] {
                if w < k.min_width {
                    out.push(format!("shell width: region {reg} has width {w} < {}", k.min_width));
                }
            }
        }
        let d = stats.diameters[reg];
        if d as f64 > k.c_d * r.cbrt() {
            out.push(format!("triangle diameter: region {reg} boundary has diameter {d} > {:.1}", k.c_d * r.cbrt()));
        }
    }
    out
}
