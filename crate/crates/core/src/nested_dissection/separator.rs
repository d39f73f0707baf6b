//! Geometric separators by axis-median bisection.

use crate::complex::{Complex3, Point};

/// Partition of a vertex set into two sides and a separator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Separator {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub s: Vec<usize>,
}

/// Default size below which a graph is not split further.
pub const BASE_CASE: usize = 64;

/// Largest side fraction accepted before an axis is considered unbalanced.
pub const BALANCE: f64 = 0.9;

/// Separator of the whole graph `adj` with coordinates `points`.
///
/// Tries the median plane along each axis and keeps the smallest separator among
/// the balanced ones. Graphs with at most `base` vertices are not split: every
/// vertex goes to `s`.
pub fn vertex_separator(points: &[Point], adj: &[Vec<usize>], base: usize) -> Separator {
    let nodes: Vec<usize> = (0..points.len()).collect();
    let mut scratch = Scratch::new(points.len());
    split(&nodes, points, adj, base, &mut scratch)
}

pub(crate) struct Scratch {
    side: Vec<u8>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self { side: vec![0; n] }
    }
}

const OUT: u8 = 0;
const SIDE_A: u8 = 1;
const SIDE_B: u8 = 2;

pub(crate) fn split(
    nodes: &[usize],
    points: &[Point],
    adj: &[Vec<usize>],
    base: usize,
    scratch: &mut Scratch,
) -> Separator {
    let n = nodes.len();
    if n <= base.max(1) {
        return Separator { a: Vec::new(), b: Vec::new(), s: nodes.to_vec() };
    }
    let mut best: Option<(bool, usize, f64, Separator)> = None;
    let mut sorted = nodes.to_vec();
    for axis in 0..3 {
        sorted.sort_unstable_by(|&x, &y| points[x][axis].total_cmp(&points[y][axis]).then(x.cmp(&y)));
        let t = points[sorted[n / 2]][axis];
        let mut cut = sorted.partition_point(|&v| points[v][axis] < t);
        if cut == 0 {
            cut = sorted.partition_point(|&v| points[v][axis] <= t);
        }
        if cut == 0 || cut == n {
            continue;
        }
        for &v in &sorted[..cut] {
            scratch.side[v] = SIDE_A;
        }
        for &v in &sorted[cut..] {
            scratch.side[v] = SIDE_B;
        }
        let touches = |v: usize, other: u8, side: &[u8]| adj[v].iter().any(|&w| side[w] == other);
        let sb: Vec<usize> = sorted[cut..].iter().copied().filter(|&v| touches(v, SIDE_A, &scratch.side)).collect();
        let sa: Vec<usize> = sorted[..cut].iter().copied().filter(|&v| touches(v, SIDE_B, &scratch.side)).collect();
        let (s, from_b) = if sb.len() <= sa.len() { (sb, true) } else { (sa, false) };
        let mut in_s = std::collections::HashSet::with_capacity(s.len());
        in_s.extend(s.iter().copied());
        let a: Vec<usize> = sorted[..cut].iter().copied().filter(|v| from_b || !in_s.contains(v)).collect();
        let b: Vec<usize> = sorted[cut..].iter().copied().filter(|v| !from_b || !in_s.contains(v)).collect();
        for &v in nodes {
            scratch.side[v] = OUT;
        }
        let balance = a.len().max(b.len()) as f64 / n as f64;
        let ok = balance <= BALANCE;
        let better = match &best {
            None => true,
            Some((bok, bs, bbal, _)) => {
                (ok && !bok) || (ok == *bok && (s.len() < *bs || (s.len() == *bs && balance < *bbal)))
            }
        };
        if better {
            let (mut a, mut b, mut s) = (a, b, s);
            a.sort_unstable();
            b.sort_unstable();
            s.sort_unstable();
            best = Some((ok, s.len(), balance, Separator { a, b, s }));
        }
    }
    match best {
        Some((_, _, _, sep)) => sep,
        None => Separator { a: Vec::new(), b: Vec::new(), s: nodes.to_vec() },
    }
}

/// Split of a set of simplexes induced by a vertex separator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimplexSplit {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub s: Vec<usize>,
}

fn subcomplex_separator(c: &Complex3, verts_of: &[Vec<usize>], base: usize) -> (Vec<u8>, bool) {
    let mut verts: Vec<usize> = verts_of.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    let local = |v: usize| verts.binary_search(&v).unwrap();
    let mut adj = vec![Vec::new(); verts.len()];
    for vs in verts_of {
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let (x, y) = (local(vs[i]), local(vs[j]));
                adj[x].push(y);
                adj[y].push(x);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let pts: Vec<Point> = verts.iter().map(|&v| c.vertices[v]).collect();
    let sep = vertex_separator(&pts, &adj, base);
    let mut label = vec![OUT; c.num_vertices()];
    for &v in &sep.a {
        label[verts[v]] = SIDE_A;
    }
    for &v in &sep.b {
        label[verts[v]] = SIDE_B;
    }
    (label, sep.a.is_empty() && sep.b.is_empty())
}

fn classify(verts_of: &[Vec<usize>], ids: &[usize], label: &[u8]) -> SimplexSplit {
    let mut out = SimplexSplit::default();
    for (vs, &id) in verts_of.iter().zip(ids) {
        if vs.iter().all(|&v| label[v] == SIDE_A) {
            out.a.push(id);
        } else if vs.iter().all(|&v| label[v] == SIDE_B) {
            out.b.push(id);
        } else {
            out.s.push(id);
        }
    }
    out
}

/// Splits a set of edges so that no triangle has an edge in both `a` and `b`.
///
/// `s` holds the edges incident to the vertex separator of their 1-skeleton.
pub fn edge_separator(c: &Complex3, edges: &[usize], base: usize) -> SimplexSplit {
    let verts_of: Vec<Vec<usize>> = edges.iter().map(|&e| c.edges[e].to_vec()).collect();
    let (label, trivial) = subcomplex_separator(c, &verts_of, base);
    if trivial {
        return SimplexSplit { a: Vec::new(), b: Vec::new(), s: edges.to_vec() };
    }
    classify(&verts_of, edges, &label)
}

/// Splits a set of triangles so that no edge lies in a triangle of `a` and one of `b`.
pub fn triangle_separator(c: &Complex3, triangles: &[usize], base: usize) -> SimplexSplit {
    let verts_of: Vec<Vec<usize>> = triangles.iter().map(|&f| c.triangles[f].to_vec()).collect();
    let (label, trivial) = subcomplex_separator(c, &verts_of, base);
    if trivial {
        return SimplexSplit { a: Vec::new(), b: Vec::new(), s: triangles.to_vec() };
    }
    classify(&verts_of, triangles, &label)
}
