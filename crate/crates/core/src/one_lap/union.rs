//! Unions of chunks glued along exterior simplexes.
//!
//! Chunks are glued by identifying exterior vertices; edges and triangles present in
//! more than one chunk become shared (`C₁`). The union carries an induced hollowing
//! whose regions are the chunk regions and whose boundary is the union of the chunk
//! boundaries together with `C₁`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OneLapReport, OneLapSolver};
use crate::complex::{build_complex, read_complex, Complex3, Point, Weights};
use crate::error::{Error, Result};
use crate::hollowing::{Hollowing, HollowingKind};
use crate::up_solver::build_split_solver;

/// One identified vertex class: `(chunk, vertex)` pairs.
pub type VertexClass = Vec<(usize, usize)>;

#[derive(Clone, Debug)]
pub struct Chunk {
    pub complex: Complex3,
    pub hollowing: Hollowing,
}

/// Glued complex with its induced hollowing and index maps.
#[derive(Clone, Debug)]
pub struct UnionComplex {
    pub chunks: Vec<Chunk>,
    pub complex: Complex3,
    pub hollowing: Hollowing,
    /// Global index of each chunk vertex, edge and triangle.
    pub vertex_map: Vec<Vec<usize>>,
    pub edge_map: Vec<Vec<usize>>,
    pub triangle_map: Vec<Vec<usize>>,
    /// Global edges and triangles present in more than one chunk.
    pub shared_edges: Vec<usize>,
    pub shared_triangles: Vec<usize>,
    /// Owning chunk of each global edge, `None` when shared.
    pub edge_chunk: Vec<Option<usize>>,
}

fn new_index(n: usize) -> Vec<Vec<usize>> {
    vec![Vec::new(); n]
}

/// Glues chunks by identifying the vertices of each class.
///
/// Every identified vertex, and every edge or triangle ending up in several chunks,
/// must be exterior in each chunk containing it.
pub fn glue(chunks: Vec<Chunk>, classes: &[VertexClass]) -> Result<UnionComplex> {
    if chunks.is_empty() {
        return Err(Error::InvalidInput("a union needs at least one chunk".into()));
    }
    for (i, ch) in chunks.iter().enumerate() {
        ch.hollowing.check_matches(&ch.complex).map_err(|e| Error::InvalidInput(format!("chunk {i}: {e}")))?;
    }
    // Class of each chunk vertex.
    let mut class_of: Vec<Vec<Option<usize>>> = chunks.iter().map(|ch| vec![None; ch.complex.num_vertices()]).collect();
    for (k, class) in classes.iter().enumerate() {
        let mut chunks_seen = Vec::new();
        for &(ci, v) in class {
            let ch = chunks.get(ci).ok_or_else(|| Error::InvalidInput(format!("class {k} names missing chunk {ci}")))?;
            if v >= ch.complex.num_vertices() {
                return Err(Error::InvalidInput(format!("class {k} names missing vertex {v} of chunk {ci}")));
            }
            if !ch.complex.exterior_vertex[v] {
                return Err(Error::InvalidInput(format!("class {k}: vertex {v} of chunk {ci} is not exterior")));
            }
            if chunks_seen.contains(&ci) {
                return Err(Error::InvalidInput(format!("class {k} identifies two vertices of chunk {ci}")));
            }
            chunks_seen.push(ci);
            if class_of[ci][v].replace(k).is_some() {
                return Err(Error::InvalidInput(format!("vertex {v} of chunk {ci} lies in two classes")));
            }
        }
    }
    let mut vertices: Vec<Point> = Vec::new();
    let mut class_vertex = vec![usize::MAX; classes.len()];
    let mut vertex_map = new_index(chunks.len());
    for (ci, ch) in chunks.iter().enumerate() {
        for (v, p) in ch.complex.vertices.iter().enumerate() {
            let g = match class_of[ci][v] {
                Some(k) if class_vertex[k] != usize::MAX => class_vertex[k],
                cls => {
                    vertices.push(*p);
                    if let Some(k) = cls {
                        class_vertex[k] = vertices.len() - 1;
                    }
                    vertices.len() - 1
                }
            };
            vertex_map[ci].push(g);
        }
    }
    let tets: Vec<[usize; 4]> = chunks
        .iter()
        .zip(&vertex_map)
        .flat_map(|(ch, vm)| ch.complex.tets.iter().map(move |t| t.map(|v| vm[v])))
        .collect();
    let complex = build_complex(&tets, &vertices, None).map_err(|e| match e {
        Error::DuplicateTet(t) => Error::InvalidInput(format!("gluing collapses two tetrahedra onto {t:?}")),
        e => e,
    })?;

    let mut edge_map = new_index(chunks.len());
    let mut triangle_map = new_index(chunks.len());
    let mut edge_owners: Vec<Vec<usize>> = new_index(complex.num_edges());
    let mut triangle_owners: Vec<Vec<usize>> = new_index(complex.num_triangles());
    for (ci, ch) in chunks.iter().enumerate() {
        let vm = &vertex_map[ci];
        for &[a, b] in &ch.complex.edges {
            let g = complex.edge_id(vm[a], vm[b]).expect("glued edges exist");
            edge_map[ci].push(g);
            edge_owners[g].push(ci);
        }
        for f in &ch.complex.triangles {
            let g = complex.triangle_id(f.map(|v| vm[v])).expect("glued triangles exist");
            triangle_map[ci].push(g);
            triangle_owners[g].push(ci);
        }
    }
    for (ci, ch) in chunks.iter().enumerate() {
        for (e, &g) in edge_map[ci].iter().enumerate() {
            if edge_owners[g].len() > 1 && !ch.complex.exterior_edge[e] {
                return Err(Error::InvalidInput(format!("shared edge {g} is not exterior in chunk {ci}")));
            }
        }
        for (f, &g) in triangle_map[ci].iter().enumerate() {
            if triangle_owners[g].len() > 1 && !ch.complex.exterior_triangle[f] {
                return Err(Error::InvalidInput(format!("shared triangle {g} is not exterior in chunk {ci}")));
            }
        }
    }
    let shared_edges: Vec<usize> = (0..complex.num_edges()).filter(|&g| edge_owners[g].len() > 1).collect();
    let shared_triangles: Vec<usize> = (0..complex.num_triangles()).filter(|&g| triangle_owners[g].len() > 1).collect();
    let edge_chunk: Vec<Option<usize>> =
        edge_owners.iter().map(|o| if o.len() == 1 { Some(o[0]) } else { None }).collect();

    // The first chunk containing a simplex supplies its weight.
    let mut w = Weights {
        w0: vec![f64::NAN; complex.num_vertices()],
        w1: vec![f64::NAN; complex.num_edges()],
        w2: vec![f64::NAN; complex.num_triangles()],
        w3: Vec::with_capacity(complex.num_tets()),
    };
    for (ci, ch) in chunks.iter().enumerate().rev() {
        let cw = &ch.complex.weights;
        vertex_map[ci].iter().zip(&cw.w0).for_each(|(&g, &x)| w.w0[g] = x);
        edge_map[ci].iter().zip(&cw.w1).for_each(|(&g, &x)| w.w1[g] = x);
        triangle_map[ci].iter().zip(&cw.w2).for_each(|(&g, &x)| w.w2[g] = x);
    }
    for ch in &chunks {
        w.w3.extend_from_slice(&ch.complex.weights.w3);
    }
    let complex = complex.with_weights(w)?;
    let hollowing = induced_hollowing(&chunks, &complex, &vertex_map, &edge_map, &triangle_map, &edge_owners, &triangle_owners);
    hollowing.check_matches(&complex)?;
    Ok(UnionComplex {
        chunks,
        complex,
        hollowing,
        vertex_map,
        edge_map,
        triangle_map,
        shared_edges,
        shared_triangles,
        edge_chunk,
    })
}

fn induced_hollowing(
    chunks: &[Chunk],
    complex: &Complex3,
    vertex_map: &[Vec<usize>],
    edge_map: &[Vec<usize>],
    triangle_map: &[Vec<usize>],
    edge_owners: &[Vec<usize>],
    triangle_owners: &[Vec<usize>],
) -> Hollowing {
    let mut offset = 0;
    let mut h = Hollowing {
        kind: HollowingKind::Shell,
        r: chunks.iter().map(|ch| ch.hollowing.r).fold(0.0, f64::max),
        num_regions: 0,
        tet_region: Vec::with_capacity(complex.num_tets()),
        tet_boundary: Vec::with_capacity(complex.num_tets()),
        vertex_class: vec![None; complex.num_vertices()],
        edge_class: vec![None; complex.num_edges()],
        triangle_class: vec![None; complex.num_triangles()],
        shells: Vec::new(),
    };
    let mut vertex_owners = vec![0usize; complex.num_vertices()];
    for vm in vertex_map {
        vm.iter().for_each(|&g| vertex_owners[g] += 1);
    }
    for (ci, ch) in chunks.iter().enumerate() {
        let ch_h = &ch.hollowing;
        let shift = |c: &Option<usize>| c.map(|r| r + offset);
        h.tet_region.extend(ch_h.tet_region.iter().map(|r| r + offset));
        h.tet_boundary.extend_from_slice(&ch_h.tet_boundary);
        for (v, &g) in vertex_map[ci].iter().enumerate() {
            if vertex_owners[g] == 1 {
                h.vertex_class[g] = shift(&ch_h.vertex_class[v]);
            }
        }
        for (e, &g) in edge_map[ci].iter().enumerate() {
            if edge_owners[g].len() == 1 {
                h.edge_class[g] = shift(&ch_h.edge_class[e]);
            }
        }
        for (f, &g) in triangle_map[ci].iter().enumerate() {
            if triangle_owners[g].len() == 1 {
                h.triangle_class[g] = shift(&ch_h.triangle_class[f]);
            }
        }
        h.shells.extend(ch_h.shells.iter().map(|s| s.iter().map(|&f| triangle_map[ci][f]).collect()));
        offset += ch_h.num_regions;
    }
    h.num_regions = offset;
    h
}

impl UnionComplex {
    pub fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    /// 1-Laplacian solver with the chunk-split preconditioner for the up solve.
    pub fn solver(&self) -> Result<OneLapSolver<'_>> {
        let up = build_split_solver(&self.complex, &self.hollowing, &self.edge_chunk)?;
        OneLapSolver::with_up_solver(&self.complex, &self.hollowing, up)
    }

    /// Global vector from per-chunk edge vectors; shared entries take the first chunk's value.
    pub fn gather_edges(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.complex.num_edges()];
        for (map, part) in self.edge_map.iter().zip(parts).rev() {
            map.iter().zip(part).for_each(|(&g, &x)| out[g] = x);
        }
        out.iter_mut().filter(|x| x.is_nan()).for_each(|x| *x = 0.0);
        out
    }
}

/// Builds the union solver and approximates `L₁⁺ b` within relative residual `eps`.
pub fn union_one_lap_solve(u: &UnionComplex, b: &[f64], eps: f64) -> Result<(Vec<f64>, OneLapReport)> {
    u.solver()?.solve(b, eps)
}

/// One chunk entry of a union file; paths are relative to the union file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChunkFile {
    pub mesh: PathBuf,
    /// Hollowing file; a trivial sphere hollowing is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hollowing: Option<PathBuf>,
}

/// Union file: chunk files plus an identification map file holding a list of
/// vertex classes, each a list of `[chunk, vertex]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnionFile {
    pub chunks: Vec<ChunkFile>,
    pub identify: PathBuf,
}

pub fn read_union(path: &Path) -> Result<UnionComplex> {
    let base = path.parent().unwrap_or(Path::new("."));
    let file: UnionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut chunks = Vec::with_capacity(file.chunks.len());
    for cf in &file.chunks {
        let complex = read_complex(&base.join(&cf.mesh))?;
        let hollowing = match &cf.hollowing {
            Some(p) => Hollowing::read(&base.join(p))?,
            None => {
                let r = (complex.num_vertices() as f64).powf(0.6);
                Hollowing::trivial(&complex, r, HollowingKind::Sphere)
            }
        };
        chunks.push(Chunk { complex, hollowing });
    }
    let classes: Vec<VertexClass> = serde_json::from_str(&std::fs::read_to_string(base.join(&file.identify))?)?;
    glue(chunks, &classes)
}

/// Vertex classes pairing vertices of two chunks that sit at the same point after
/// translating chunk `b` by `shift`.
pub fn coincident_classes(chunks: &[Chunk], a: usize, b: usize, shift: Point) -> Vec<VertexClass> {
    let key = |p: &Point| p.map(|x| (x * 1e6).round() as i64);
    let index: HashMap<[i64; 3], usize> = chunks[a]
        .complex
        .vertices
        .iter()
        .enumerate()
        .filter(|&(v, _)| chunks[a].complex.exterior_vertex[v])
        .map(|(v, p)| (key(p), v))
        .collect();
    chunks[b]
        .complex
        .vertices
        .iter()
        .enumerate()
        .filter(|&(v, _)| chunks[b].complex.exterior_vertex[v])
        .filter_map(|(v, p)| {
            let q = [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]];
            index.get(&key(&q)).map(|&u| vec![(a, u), (b, v)])
        })
        .collect()
}
