//! Nested dissection elimination orderings.

use crate::complex::Point;

use super::separator::{split, Scratch, BASE_CASE};

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}

/// Nested dissection ordering of a graph with vertex coordinates.
///
/// Returns `perm` with `perm[k]` the vertex eliminated at step `k`. Each piece is
/// ordered as: first side, second side, separator. Pieces with at most `base`
/// vertices are emitted in index order. Vertices in `root` are removed before the
/// first split and eliminated last.
pub fn nd_ordering(points: &[Point], adj: &[Vec<usize>], base: usize, root: Option<&[usize]>) -> Vec<usize> {
    let n = points.len();
    let mut is_root = vec![false; n];
    let mut tail = Vec::new();
    if let Some(r) = root {
        for &v in r {
            if !is_root[v] {
                is_root[v] = true;
                tail.push(v);
            }
        }
    }
    let first: Vec<usize> = (0..n).filter(|&v| !is_root[v]).collect();
    // Adjacency with root vertices removed so they do not count toward separators.
    let pruned: Vec<Vec<usize>>;
    let adj = if tail.is_empty() {
        adj
    } else {
        pruned = adj.iter().map(|nb| nb.iter().copied().filter(|&w| !is_root[w]).collect()).collect();
        &pruned
    };
    let mut scratch = Scratch::new(n);
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![Task::Split(first)];
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(s) => out.extend(s),
            Task::Split(nodes) => {
                let sep = split(&nodes, points, adj, base, &mut scratch);
                if sep.a.is_empty() && sep.b.is_empty() {
                    out.extend(sep.s);
                    continue;
                }
                stack.push(Task::Emit(sep.s));
                stack.push(Task::Split(sep.b));
                stack.push(Task::Split(sep.a));
            }
        }
    }
    out.extend(tail);
    out
}

/// Nested dissection ordering with the default base case and no root separator.
pub fn nd_ordering_default(points: &[Point], adj: &[Vec<usize>]) -> Vec<usize> {
    nd_ordering(points, adj, BASE_CASE, None)
}

/// Inverse of a permutation.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}
