use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::complex::{down_laplacian, up_laplacian, Point};
use crate::hollowing::sphere_hollowing;
use crate::mesh_gen::{gen_grid, random_weights, translate, GridSpec, HoleKind};
use crate::oracle::{from_sparse, mat_vec, to_vec, DEFAULT_TOL};
use crate::sparse::dot;

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn slab_hollowing(c: &Complex3, lo: f64, hi: f64) -> Hollowing {
    let in_t: Vec<bool> = (0..c.num_tets()).map(|t| (lo..hi).contains(&c.tet_centroid(t)[0])).collect();
    Hollowing::from_boundary_tets(c, 8.0, &in_t).unwrap()
}

fn cavity_mesh() -> (Complex3, Hollowing) {
    let c = gen_grid(&GridSpec::solid(8, 3, 3).with_hole([3, 1, 1], [5, 2, 2], HoleKind::Cavity)).unwrap();
    let c = random_weights(&c, 0.5, 2.0, 11);
    let h = slab_hollowing(&c, 2.0, 6.0);
    (c, h)
}

fn tunnel_mesh() -> Complex3 {
    gen_grid(&GridSpec::solid(5, 5, 3).with_hole([2, 2, 0], [3, 3, 3], HoleKind::Tunnel)).unwrap()
}

/// Dense `Π₁` and `L₁⁺`.
fn oracle_l1(c: &Complex3) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let l = from_sparse(&one_laplacian(c));
    (oracle::projection(&l).unwrap(), oracle::pinv(&l, DEFAULT_TOL).unwrap(), l)
}

/// Checks the solve contract against the dense projection.
fn assert_contract(c: &Complex3, x: &[f64], b: &[f64], eps: f64) {
    let (p, _, l) = oracle_l1(c);
    let pb = mat_vec(&p, b);
    let r = norm(&sub(&mat_vec(&l, x), &pb));
    assert!(r <= eps * norm(&pb), "residual {:.3e} vs {:.3e}", r / norm(&pb), eps);
}

#[test]
fn zero_rhs_gives_zero() {
    let (c, h) = cavity_mesh();
    let s = OneLapSolver::new(&c, &h).unwrap();
    let (x, rep) = s.solve(&vec![0.0; c.num_edges()], 1e-6).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
    assert_eq!(rep.relative_residual, 0.0);
}

#[test]
fn rejects_bad_arguments() {
    let (c, h) = cavity_mesh();
    let s = OneLapSolver::new(&c, &h).unwrap();
    assert!(matches!(s.solve(&[1.0], 1e-6), Err(Error::IndexMismatch(_))));
    assert!(matches!(s.solve(&vec![1.0; c.num_edges()], 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn delta_follows_kappa() {
    let (c, h) = cavity_mesh();
    let s = OneLapSolver::new(&c, &h).unwrap();
    assert!(s.kappa.kappa >= 2.0);
    assert_eq!(s.delta(1e-6), 1e-6 / (11.0 * s.kappa.kappa));
    // Lanczos extremes lie inside the dense spectrum and the safety factor covers the gap.
    let eig = oracle::sym_eigen(&from_sparse(&up_laplacian(&c, 1).unwrap())).unwrap().eigenvalues;
    let lmax = eig.max();
    let lmin = eig.iter().copied().filter(|&v| v > 1e-9 * lmax).fold(f64::INFINITY, f64::min);
    assert!(s.kappa.up.1 <= lmax * (1.0 + 1e-9));
    assert!(s.kappa.up.0 >= lmin * (1.0 - 1e-9));
    assert!(s.kappa.kappa >= lmax / lmin);
}

#[test]
fn harmonic_rhs_gives_small_solution() {
    let c = tunnel_mesh();
    let h = Hollowing::trivial(&c, 8.0, HollowingKind::Shell);
    let s = OneLapSolver::new(&c, &h).unwrap();
    let l = from_sparse(&one_laplacian(&c));
    let ker = oracle::kernel_basis(&l, DEFAULT_TOL).unwrap();
    assert_eq!(ker.ncols(), 1);
    let b = to_vec(&ker.column(0).into_owned());
    let eps = 1e-6;
    let (x, rep) = s.solve(&b, eps).unwrap();
    assert!(rep.projected_norm <= eps * norm(&b));
    let (_, lp, _) = oracle_l1(&c);
    let scale = lp.norm();
    assert!(norm(&x) <= eps * scale * norm(&b));
}

#[test]
fn cavity_solve_matches_oracle() {
    let (c, h) = cavity_mesh();
    let s = OneLapSolver::new(&c, &h).unwrap();
    let (p, lp, _) = oracle_l1(&c);
    let eps = 1e-6;
    for seed in 0..3 {
        let b = random(c.num_edges(), seed);
        let (x, rep) = s.solve(&b, eps).unwrap();
        assert!(rep.relative_residual <= eps);
        assert_contract(&c, &x, &b, eps);
        let want = mat_vec(&lp, &mat_vec(&p, &b));
        let got = mat_vec(&p, &x);
        assert!(norm(&sub(&got, &want)) <= 1e-4 * norm(&want));
    }
}

#[test]
fn sphere_hollowing_uses_fast_path() {
    let c = random_weights(&gen_grid(&GridSpec::solid(8, 8, 8)).unwrap(), 0.5, 2.0, 5);
    let h = sphere_hollowing(&c, 128.0).unwrap();
    let s = OneLapSolver::new(&c, &h).unwrap();
    assert!(matches!(s.up.precond, crate::up_solver::Preconditioner::Surface(_)));
    let b = random(c.num_edges(), 7);
    let eps = 1e-6;
    let (x, rep) = s.solve(&b, eps).unwrap();
    assert!(rep.relative_residual <= eps);
    let r = norm(&sub(&s.l1.mul_vec(&x), &add(&rep_parts(&s, &b).0, &rep_parts(&s, &b).1)));
    assert!(r <= 2.0 * eps * rep.projected_norm);
}

/// Projections of `b` at a much tighter accuracy than the solve.
fn rep_parts(s: &OneLapSolver<'_>, b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let up = s.projection.project(b, 1e-12).unwrap().0;
    let down = s.down.down_projection(b, 1e-12).unwrap().0;
    (up, down)
}

#[test]
fn recombination_with_exact_subsolves() {
    let (c, _) = cavity_mesh();
    let lu = from_sparse(&up_laplacian(&c, 1).unwrap());
    let ld = from_sparse(&down_laplacian(&c, 1).unwrap());
    let (pu, pd) = (oracle::projection(&lu).unwrap(), oracle::projection(&ld).unwrap());
    let l = &lu + &ld;
    let b = mat_vec(&l, &random(c.num_edges(), 21));
    let xu = oracle::pinv_solve(&lu, &mat_vec(&pu, &b)).unwrap();
    let xd = oracle::pinv_solve(&ld, &mat_vec(&pd, &b)).unwrap();
    let x = add(&mat_vec(&pu, &xu), &mat_vec(&pd, &xd));
    assert!(norm(&sub(&mat_vec(&l, &x), &b)) <= 1e-8 * norm(&b));
}

fn assert_orthogonal(parts: &HodgeParts, f: &[f64], eps: f64) {
    let f2 = dot(f, f);
    let HodgeParts { gradient: g, curl: k, harmonic: hm } = parts;
    for (a, b) in [(g, k), (g, hm), (k, hm)] {
        assert!(dot(a, b).abs() <= 10.0 * eps * f2, "inner product {:.3e}", dot(a, b) / f2);
    }
}

#[test]
fn hodge_of_gradient_and_curl() {
    let (c, h) = cavity_mesh();
    let s = OneLapSolver::new(&c, &h).unwrap();
    let eps = 1e-6;
    let g = s.down.d1.mul_t_vec(&random(c.num_vertices(), 1));
    let parts = s.hodge(&g, eps).unwrap();
    assert!(norm(&sub(&parts.gradient, &g)) <= eps * norm(&g));
    assert!(norm(&parts.curl) <= eps * norm(&g));
    assert!(norm(&parts.harmonic) <= 2.0 * eps * norm(&g));
    let d2 = boundary_operator(&c, 2).unwrap().to_f64();
    let k = d2.mul_vec(&vec![1.0; c.num_triangles()]);
    let parts = s.hodge(&k, eps).unwrap();
    assert!(norm(&parts.gradient) <= eps * norm(&k));
    assert!(norm(&sub(&parts.curl, &k)) <= eps * norm(&k));
    assert!(norm(&parts.harmonic) <= 2.0 * eps * norm(&k));
}

#[test]
fn hodge_on_tunnel_has_harmonic_part() {
    let c = tunnel_mesh();
    let h = Hollowing::trivial(&c, 8.0, HollowingKind::Shell);
    let s = OneLapSolver::new(&c, &h).unwrap();
    let l = from_sparse(&one_laplacian(&c));
    let ker = oracle::kernel_basis(&l, DEFAULT_TOL).unwrap();
    let harm = &ker * ker.transpose();
    let eps = 1e-6;
    for seed in 0..3 {
        let f = random(c.num_edges(), 30 + seed);
        let parts = s.hodge(&f, eps).unwrap();
        assert_orthogonal(&parts, &f, eps);
        let want = mat_vec(&harm, &f);
        assert!(norm(&parts.harmonic) >= 1e-3 * norm(&f));
        assert!(norm(&sub(&parts.harmonic, &want)) <= 2.0 * eps * norm(&f));
    }
}

#[test]
fn betti_numbers_of_basic_meshes() {
    let solid = gen_grid(&GridSpec::solid(3, 3, 3)).unwrap();
    assert_eq!(betti_numbers(&solid).unwrap(), (1, 0, 0));
    let (cavity, _) = cavity_mesh();
    assert_eq!(betti_numbers(&cavity).unwrap(), (1, 0, 1));
    assert_eq!(betti_numbers(&tunnel_mesh()).unwrap(), (1, 1, 0));
    let big = gen_grid(&GridSpec::solid(10, 10, 10)).unwrap();
    assert!(matches!(betti_numbers(&big), Err(Error::SizeCap { .. })));
}

fn chunk(a: usize, b: usize, c: usize, shift: Point) -> Chunk {
    let complex = translate(&gen_grid(&GridSpec::solid(a, b, c)).unwrap(), shift);
    let hollowing = Hollowing::trivial(&complex, 8.0, HollowingKind::Shell);
    Chunk { complex, hollowing }
}

#[test]
fn single_chunk_union_matches_direct_solve() {
    let (c, h) = cavity_mesh();
    let u = glue(vec![Chunk { complex: c.clone(), hollowing: h.clone() }], &[]).unwrap();
    assert!(u.shared_edges.is_empty());
    assert_eq!(u.complex.edges, c.edges);
    let b = random(c.num_edges(), 40);
    let eps = 1e-6;
    let (x_direct, _) = OneLapSolver::new(&c, &h).unwrap().solve(&b, eps).unwrap();
    let (x_union, _) = union_one_lap_solve(&u, &b, eps).unwrap();
    let (p, _, _) = oracle_l1(&c);
    let d = mat_vec(&p, &sub(&x_direct, &x_union));
    assert!(norm(&d) <= 1e-8 * norm(&x_direct));
}

#[test]
fn two_chunks_glued_on_a_face() {
    let chunks = vec![chunk(4, 4, 4, [0.0; 3]), chunk(4, 4, 4, [4.0, 0.0, 0.0])];
    let classes = coincident_classes(&chunks, 0, 1, [0.0; 3]);
    assert_eq!(classes.len(), 25);
    let u = glue(chunks, &classes).unwrap();
    assert_eq!(u.complex.num_vertices(), 2 * 125 - 25);
    assert_eq!(u.shared_triangles.len(), 32);
    assert_eq!(betti_numbers(&u.complex).unwrap(), (1, 0, 0));
    let solver = u.solver().unwrap();
    assert!(matches!(solver.up.precond, crate::up_solver::Preconditioner::Split(_)));
    let eps = 1e-6;
    let b = random(u.complex.num_edges(), 41);
    let (x, _) = solver.solve(&b, eps).unwrap();
    assert_contract(&u.complex, &x, &b, eps);
}

#[test]
fn ring_of_four_chunks() {
    // Each chunk's x = 4 face is glued to the next chunk's x = 0 face.
    let chunks: Vec<Chunk> = (0..4).map(|_| chunk(4, 2, 2, [0.0; 3])).collect();
    let mut classes = Vec::new();
    for i in 0..4 {
        let j = (i + 1) % 4;
        for cls in coincident_classes(&chunks, i, j, [4.0, 0.0, 0.0]) {
            classes.push(cls);
        }
    }
    let u = glue(chunks, &classes).unwrap();
    assert_eq!(betti_numbers(&u.complex).unwrap(), (1, 1, 0));
    let eps = 1e-6;
    let b = random(u.complex.num_edges(), 42);
    let (x, rep) = union_one_lap_solve(&u, &b, eps).unwrap();
    assert!(rep.relative_residual <= eps);
    assert_contract(&u.complex, &x, &b, eps);
}

#[test]
fn union_of_hollowed_chunks() {
    let mk = |shift: Point| {
        let complex = translate(&gen_grid(&GridSpec::solid(6, 3, 3)).unwrap(), shift);
        let lo = shift[0] + 2.0;
        let hollowing = slab_hollowing(&complex, lo, lo + 1.0);
        Chunk { complex, hollowing }
    };
    let chunks = vec![mk([0.0; 3]), mk([6.0, 0.0, 0.0])];
    let classes = coincident_classes(&chunks, 0, 1, [0.0; 3]);
    let u = glue(chunks, &classes).unwrap();
    assert_eq!(u.hollowing.num_regions, 4);
    let solver = u.solver().unwrap();
    let crate::up_solver::Preconditioner::Split(split) = &solver.up.precond else { panic!("split preconditioner expected") };
    assert_eq!(split.c1.len(), u.shared_edges.len());
    assert!(!split.c2.is_empty());
    let eps = 1e-6;
    let b = random(u.complex.num_edges(), 43);
    let (x, _) = solver.solve(&b, eps).unwrap();
    assert_contract(&u.complex, &x, &b, eps);
}

#[test]
fn glue_rejects_inconsistent_maps() {
    let chunks = || vec![chunk(3, 3, 3, [0.0; 3]), chunk(3, 3, 3, [3.0, 0.0, 0.0])];
    let interior = gen_grid(&GridSpec::solid(3, 3, 3)).unwrap();
    let inner = (0..interior.num_vertices()).find(|&v| !interior.exterior_vertex[v]).unwrap();
    let err = |classes: &[VertexClass]| matches!(glue(chunks(), classes), Err(Error::InvalidInput(_)));
    assert!(err(&[vec![(0, inner), (1, 0)]]));
    assert!(err(&[vec![(0, 0), (0, 1)]]));
    assert!(err(&[vec![(0, 0), (1, 0)], vec![(0, 0), (1, 1)]]));
    assert!(err(&[vec![(0, 0), (2, 0)]]));
    // Identifying every vertex of a cell with its copy collapses tetrahedra.
    let cell = || chunk(1, 1, 1, [0.0; 3]);
    let all: Vec<VertexClass> = (0..8).map(|v| vec![(0, v), (1, v)]).collect();
    assert!(matches!(glue(vec![cell(), cell()], &all), Err(Error::InvalidInput(_))));
}

#[test]
fn union_weights_come_from_chunks() {
    let mut chunks = vec![chunk(2, 2, 2, [0.0; 3]), chunk(2, 2, 2, [2.0, 0.0, 0.0])];
    chunks[1].complex = random_weights(&chunks[1].complex, 0.5, 2.0, 3);
    let classes = coincident_classes(&chunks, 0, 1, [0.0; 3]);
    let u = glue(chunks, &classes).unwrap();
    for (ci, ch) in u.chunks.iter().enumerate() {
        for (e, &g) in u.edge_map[ci].iter().enumerate() {
            if u.edge_chunk[g] == Some(ci) {
                assert_eq!(u.complex.weights.w1[g], ch.complex.weights.w1[e]);
            } else {
                assert_eq!(u.complex.weights.w1[g], u.chunks[0].complex.weights.w1[u.edge_map[0].iter().position(|&x| x == g).unwrap()]);
            }
        }
    }
    let dv = DVector::from_vec(u.gather_edges(&[vec![1.0; u.chunks[0].complex.num_edges()], vec![2.0; u.chunks[1].complex.num_edges()]]));
    assert_eq!(dv.iter().filter(|&&v| v == 1.0).count(), u.chunks[0].complex.num_edges());
}
