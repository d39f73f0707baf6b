//! End-to-end acceptance checks, one line per criterion.

use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hollowlap::complex::{boundary_operator, down_laplacian, one_laplacian, up_laplacian, Complex3};
use hollowlap::down_solver::DownSolver;
use hollowlap::hollowing::{find_hollowing, sphere_hollowing, Hollowing, HollowingKind};
use hollowlap::mesh_gen::{gen_grid, random_weights, translate, GridSpec, HoleKind};
use hollowlap::one_lap::{
    betti_numbers, coincident_classes, glue, hodge_decompose, union_one_lap_solve, Chunk, OneLapSolver,
};
use hollowlap::oracle::{self, from_sparse, mat_vec, DEFAULT_TOL};
use hollowlap::pcg::LinearOperator;
use hollowlap::sparse::{dot, norm, sub};
use hollowlap::up_projection::{build_up_projection, up_project};
use hollowlap::up_solver::{build_sphere_fast_solver, build_up_solver, up_lap_solve, up_lap_solve_fast};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn show(r: &hollowlap::Result<f64>) -> String {
    match r {
        Ok(v) => format!("{v:.2e}"),
        Err(e) => format!("error: {e}"),
    }
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// How a corpus mesh is hollowed for the solver checks.
#[derive(Clone, Copy)]
enum Split {
    Shell,
    Sphere,
    /// Boundary slab of tetrahedra with centroid `x ∈ [lo, lo + 1)`.
    Slab(f64),
}

struct Mesh {
    name: String,
    complex: Complex3,
    split: Split,
    betti: (usize, usize, usize),
}

impl Mesh {
    fn hollowing(&self) -> Hollowing {
        let c = &self.complex;
        match self.split {
            Split::Shell => Hollowing::trivial(c, 8.0, HollowingKind::Shell),
            Split::Sphere => Hollowing::trivial(c, 8.0, HollowingKind::Sphere),
            Split::Slab(lo) => {
                let in_t: Vec<bool> =
                    (0..c.num_tets()).map(|t| (lo..lo + 1.0).contains(&c.tet_centroid(t)[0])).collect();
                Hollowing::from_boundary_tets(c, 8.0, &in_t).expect("slab hollowing")
            }
        }
    }
}

type Entry = (&'static str, GridSpec, Split, (usize, usize, usize));

fn corpus() -> Vec<Mesh> {
    let solid = |d: [usize; 3]| GridSpec::solid(d[0], d[1], d[2]);
    let entries: Vec<Entry> = vec![
        ("cell", solid([1, 1, 1]), Split::Shell, (1, 0, 0)),
        ("bar 2x1x1", solid([2, 1, 1]), Split::Sphere, (1, 0, 0)),
        ("cube 2", solid([2, 2, 2]), Split::Shell, (1, 0, 0)),
        ("slab 3x2x1", solid([3, 2, 1]), Split::Sphere, (1, 0, 0)),
        ("cube 3", solid([3, 3, 3]), Split::Sphere, (1, 0, 0)),
        ("box 4x2x2", solid([4, 2, 2]), Split::Shell, (1, 0, 0)),
        ("box 5x3x2", solid([5, 3, 2]), Split::Shell, (1, 0, 0)),
        ("bar 6x2x2", solid([6, 2, 2]), Split::Slab(2.0), (1, 0, 0)),
        ("bar 6x3x2", solid([6, 3, 2]), Split::Slab(3.0), (1, 0, 0)),
        ("cube 4", solid([4, 4, 4]), Split::Shell, (1, 0, 0)),
        ("cube 8", solid([8, 8, 8]), Split::Shell, (1, 0, 0)),
        ("cube 10", solid([10, 10, 10]), Split::Shell, (1, 0, 0)),
        ("cavity 3", solid([3, 3, 3]).with_hole([1, 1, 1], [2, 2, 2], HoleKind::Cavity), Split::Shell, (1, 0, 1)),
        ("cavity 5x3x3", solid([5, 3, 3]).with_hole([2, 1, 1], [3, 2, 2], HoleKind::Cavity), Split::Shell, (1, 0, 1)),
        (
            "cavity 8x3x3",
            solid([8, 3, 3]).with_hole([3, 1, 1], [5, 2, 2], HoleKind::Cavity),
            Split::Slab(2.0),
            (1, 0, 1),
        ),
        ("cavity 5", solid([5, 5, 5]).with_hole([1, 1, 1], [4, 4, 4], HoleKind::Cavity), Split::Shell, (1, 0, 1)),
        (
            "two cavities",
            solid([12, 3, 3]).with_hole([1, 1, 1], [2, 2, 2], HoleKind::Cavity).with_hole(
                [8, 1, 1],
                [9, 2, 2],
                HoleKind::Cavity,
            ),
            Split::Slab(4.0),
            (1, 0, 2),
        ),
        ("tunnel z", solid([3, 3, 2]).with_hole([1, 1, 0], [2, 2, 2], HoleKind::Tunnel), Split::Shell, (1, 1, 0)),
        ("tunnel y", solid([3, 4, 3]).with_hole([1, 0, 1], [2, 4, 2], HoleKind::Tunnel), Split::Shell, (1, 1, 0)),
        ("tunnel x", solid([4, 3, 3]).with_hole([0, 1, 1], [4, 2, 2], HoleKind::Tunnel), Split::Shell, (1, 1, 0)),
        ("tunnel 5x5x3", solid([5, 5, 3]).with_hole([2, 2, 0], [3, 3, 3], HoleKind::Tunnel), Split::Shell, (1, 1, 0)),
        ("tunnel 8x8x4", solid([8, 8, 4]).with_hole([3, 3, 0], [5, 5, 4], HoleKind::Tunnel), Split::Shell, (1, 1, 0)),
    ];
    entries
        .into_iter()
        .enumerate()
        .map(|(i, (name, spec, split, betti))| {
            let mut complex = gen_grid(&spec).expect("valid grid");
            if i % 2 == 1 {
                complex = random_weights(&complex, 0.5, 2.0, i as u64);
            }
            Mesh { name: name.to_string(), complex, split, betti }
        })
        .collect()
}

fn structural_exactness(corpus: &[Mesh]) -> Outcome {
    let holes = corpus.iter().filter(|m| m.betti != (1, 0, 0)).count();
    let bad: Vec<&str> = corpus
        .iter()
        .filter(|m| {
            let d: Vec<_> = (1..=3).map(|i| boundary_operator(&m.complex, i).unwrap()).collect();
            !d[0].matmul_exact(&d[1]).is_empty() || !d[1].matmul_exact(&d[2]).is_empty()
        })
        .map(|m| m.name.as_str())
        .collect();
    let pass = bad.is_empty() && corpus.len() >= 20 && holes > 0;
    Outcome::new(pass, format!("{} meshes ({holes} with holes), failures {bad:?}", corpus.len()))
}

fn oracle_equivalence(corpus: &[Mesh]) -> Outcome {
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut meshes = 0;
    let mut slowest = 0.0f64;
    let mut errors = Vec::new();
    for (i, m) in corpus.iter().filter(|m| m.complex.num_simplexes() <= 2000).enumerate() {
        let t0 = Instant::now();
        let c = &m.complex;
        let h = m.hollowing();
        let solver = match OneLapSolver::new(c, &h) {
            Ok(s) => s,
            Err(e) => {
                errors.push(format!("{}: {e}", m.name));
                continue;
            }
        };
        let l = from_sparse(&one_laplacian(c));
        let proj = oracle::projection(&l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        for _ in 0..20 {
            let b = random(c.num_edges(), &mut rng);
            let pb = mat_vec(&proj, &b);
            match solver.solve(&b, eps) {
                Ok((x, _)) => worst = worst.max(norm(&sub(&mat_vec(&l, &x), &pb)) / norm(&pb)),
                Err(e) => errors.push(format!("{}: {e}", m.name)),
            }
        }
        meshes += 1;
        slowest = slowest.max(t0.elapsed().as_secs_f64());
    }
    let pass = errors.is_empty() && worst <= eps && meshes >= 10 && slowest <= 120.0;
    Outcome::new(
        pass,
        format!("{meshes} meshes x 20 rhs, worst relative residual {worst:.2e}, slowest mesh {slowest:.2}s, errors {errors:?}"),
    )
}

fn down_solver_exactness(corpus: &[Mesh]) -> Outcome {
    let mut worst = 0.0f64;
    for (i, m) in corpus.iter().enumerate() {
        let c = &m.complex;
        let l = down_laplacian(c, 1).unwrap();
        let s = DownSolver::new(c);
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        for _ in 0..100 {
            let b = l.mul_vec(&random(c.num_edges(), &mut rng));
            let x = s.down_lap_solve(&b).unwrap();
            worst = worst.max(norm(&sub(&l.mul_vec(&x), &b)) / norm(&b));
        }
    }
    Outcome::new(worst <= 1e-10, format!("{} meshes x 100 image vectors, worst {worst:.2e}", corpus.len()))
}

/// Dense extreme eigenvalues of `L_T^{+1/2} Sc L_T^{+1/2}` on the image of `L_T`.
fn dense_relative_spectrum(sc: &DMatrix<f64>, lt: &DMatrix<f64>) -> (f64, f64) {
    let eig = oracle::sym_eigen(lt).unwrap();
    let tol = DEFAULT_TOL * eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > tol).collect();
    let q = DMatrix::from_fn(lt.nrows(), keep.len(), |r, k| {
        eig.eigenvectors[(r, keep[k])] / eig.eigenvalues[keep[k]].sqrt()
    });
    let m = q.transpose() * sc * &q;
    let ev = oracle::sym_eigen(&m).unwrap().eigenvalues;
    (ev.min(), ev.max())
}

fn spectral_bound() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    // Lanczos agrees with the dense relative spectrum on a small instance.
    let small = Mesh {
        name: "bar".into(),
        complex: random_weights(&gen_grid(&GridSpec::solid(6, 3, 3)).unwrap(), 0.5, 2.0, 1),
        split: Split::Slab(2.0),
        betti: (1, 0, 0),
    };
    let s = build_up_solver(&small.complex, &small.hollowing()).unwrap();
    let l = from_sparse(&s.l);
    let (f, cc): (Vec<usize>, Vec<usize>) = (s.f_edges.clone(), s.c_edges.clone());
    let sc_dense = oracle::schur_complement(&l, &f, &cc).unwrap();
    let (dlo, dhi) = dense_relative_spectrum(&sc_dense, &from_sparse(&s.l_t));
    let (llo, lhi) = s.relative_spectrum(200);
    let agree = (llo - dlo).abs() <= 1e-6 * dlo && (lhi - dhi).abs() <= 1e-6 * dhi;
    pass &= agree && dlo >= 1.0 - 1e-6;
    lines.push(format!("dense [{dlo:.6}, {dhi:.4}] lanczos [{llo:.6}, {lhi:.4}]"));
    for side in [10usize, 16] {
        let c = gen_grid(&GridSpec::solid(side, side, side)).unwrap();
        for r in [32.0, 128.0, 512.0] {
            let h = find_hollowing(&c, r).unwrap();
            let s = build_up_solver(&c, &h).unwrap();
            let (lo, hi) = s.relative_spectrum(80);
            let kappa = hi / lo;
            pass &= lo >= 1.0 - 1e-6 && kappa <= 64.0 * r;
            lines.push(format!("{side}^3 r={r}: lo {lo:.6} kappa {kappa:.2} (C = {:.4})", kappa / r));
        }
    }
    Outcome::new(pass, lines.join("; "))
}

fn pcg_iteration_scaling() -> Outcome {
    let c = gen_grid(&GridSpec::solid(16, 16, 16)).unwrap();
    let rs = [32.0, 128.0, 512.0];
    let mut iters = Vec::new();
    for r in rs {
        let h = find_hollowing(&c, r).unwrap();
        let s = build_up_solver(&c, &h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let hv = s.schur_apply(&random(s.c_edges.len(), &mut rng));
        let (_, rep) = s.schur_solve(&hv, 1e-8).unwrap();
        iters.push(rep.iterations as f64);
    }
    let slope = log_slope(&rs, &iters);
    Outcome::new((0.3..=0.7).contains(&slope), format!("16^3 iterations {iters:?} at r {rs:?}, fitted exponent {slope:.3}"))
}

fn up_projection_correctness(corpus: &[Mesh]) -> Outcome {
    let eps = 1e-6;
    let (mut formula_err, mut contract_err) = (0.0f64, 0.0f64);
    let mut meshes = 0;
    let mut slabs = 0;
    for (i, m) in corpus.iter().filter(|m| m.complex.num_simplexes() <= 1500).enumerate() {
        let c = &m.complex;
        let h = m.hollowing();
        let s = build_up_projection(c, &h).unwrap();
        let d = from_sparse(&boundary_operator(c, 2).unwrap().to_f64());
        let (df, dc) = (from_sparse(&s.d2_f), from_sparse(&s.d2_c));
        let pim = oracle::projection(&df).unwrap();
        let pker = DMatrix::identity(c.num_edges(), c.num_edges()) - &pim;
        let sc = dc.transpose() * &pker * &dc;
        let formula = &pim + &pker * &dc * oracle::pinv(&sc, DEFAULT_TOL).unwrap() * dc.transpose() * &pker;
        let want = oracle::projection(&d).unwrap();
        formula_err = formula_err.max((formula - &want).amax());
        let mut rng = ChaCha8Rng::seed_from_u64(600 + i as u64);
        for _ in 0..5 {
            let b = random(c.num_edges(), &mut rng);
            let pb = mat_vec(&want, &b);
            let p = up_project(c, &h, &b, eps).unwrap();
            contract_err = contract_err.max(norm(&sub(&p, &pb)) / norm(&pb));
        }
        meshes += 1;
        slabs += usize::from(matches!(m.split, Split::Slab(_)));
    }
    let pass = meshes >= 5 && slabs >= 1 && formula_err <= 1e-8 && contract_err <= eps;
    Outcome::new(
        pass,
        format!("{meshes} meshes ({slabs} slab-hollowed), formula error {formula_err:.2e}, projection error {contract_err:.2e}"),
    )
}

fn graph_laplacian(n: usize, cycle: bool) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let m = if cycle { n } else { n - 1 };
    for i in 0..m {
        let j = (i + 1) % n;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

fn lambda_min_diameter() -> Outcome {
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    for n in [4usize, 8, 16, 32] {
        for cycle in [false, true] {
            let mut ev: Vec<f64> = oracle::sym_eigen(&graph_laplacian(n, cycle)).unwrap().eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let (closed, diameter) = if cycle {
                (2.0 * (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos()), (n / 2) as f64)
            } else {
                (2.0 * (1.0 - (std::f64::consts::PI / n as f64).cos()), (n - 1) as f64)
            };
            let bound = 4.0 / (n as f64 * diameter);
            pass &= (ev[1] - closed).abs() <= 1e-12 && ev[0].abs() <= 1e-12 && closed >= bound;
            worst_margin = worst_margin.min(closed / bound);
        }
    }
    Outcome::new(pass, format!("paths and cycles n in {{4,8,16,32}}, min lambda_min / bound = {worst_margin:.4}"))
}

fn dense_sized(c: &Complex3) -> bool {
    [c.num_vertices(), c.num_edges(), c.num_triangles(), c.num_tets()].iter().all(|&k| k <= oracle::SIZE_CAP)
}

fn betti_diagnostics(corpus: &[Mesh]) -> Outcome {
    let mut checked = Vec::new();
    let mut pass = true;
    for m in corpus.iter().filter(|m| dense_sized(&m.complex)) {
        let c = &m.complex;
        let b = betti_numbers(c).unwrap();
        let euler = c.num_vertices() as i64 - c.num_edges() as i64 + c.num_triangles() as i64 - c.num_tets() as i64;
        let ok = b == m.betti && b.0 as i64 - b.1 as i64 + b.2 as i64 == euler;
        pass &= ok;
        if !ok {
            checked.push(format!("{}: {b:?}", m.name));
        }
    }
    let kinds = [(1, 0, 0), (1, 0, 1), (1, 1, 0)];
    pass &= kinds.iter().all(|k| corpus.iter().any(|m| m.betti == *k && dense_sized(&m.complex)));
    Outcome::new(pass, format!("solid (1,0,0), cavity (1,0,1), tunnel (1,1,0); mismatches {checked:?}"))
}

fn hodge_orthogonality(corpus: &[Mesh]) -> Outcome {
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut meshes = 0;
    for (i, m) in corpus.iter().filter(|m| m.complex.num_simplexes() <= 3000).enumerate() {
        let c = &m.complex;
        let mut rng = ChaCha8Rng::seed_from_u64(900 + i as u64);
        let f = random(c.num_edges(), &mut rng);
        let p = hodge_decompose(c, &m.hollowing(), &f, eps).unwrap();
        let nf2 = dot(&f, &f);
        for (x, y) in [(&p.gradient, &p.curl), (&p.gradient, &p.harmonic), (&p.curl, &p.harmonic)] {
            worst = worst.max(dot(x, y).abs() / nf2);
        }
        let total: Vec<f64> = (0..f.len()).map(|k| p.gradient[k] + p.curl[k] + p.harmonic[k]).collect();
        sum_err = sum_err.max(norm(&sub(&total, &f)) / norm(&f));
        meshes += 1;
    }
    let pass = worst <= 10.0 * eps && sum_err <= 1e-12;
    Outcome::new(pass, format!("{meshes} meshes, max |<a,b>| / |f|^2 = {worst:.2e}, sum error {sum_err:.2e}"))
}

fn grid_chunk(d: [usize; 3], shift: [f64; 3]) -> Chunk {
    let complex = translate(&gen_grid(&GridSpec::solid(d[0], d[1], d[2])).unwrap(), shift);
    let hollowing = Hollowing::trivial(&complex, 8.0, HollowingKind::Shell);
    Chunk { complex, hollowing }
}

fn contract_residual(c: &Complex3, x: &[f64], b: &[f64]) -> f64 {
    let l = from_sparse(&one_laplacian(c));
    let pb = mat_vec(&oracle::projection(&l).unwrap(), b);
    norm(&sub(&mat_vec(&l, x), &pb)) / norm(&pb)
}

fn union_solver() -> Outcome {
    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(1000);

    let chunks = vec![grid_chunk([4, 4, 4], [0.0; 3]), grid_chunk([4, 4, 4], [4.0, 0.0, 0.0])];
    let classes = coincident_classes(&chunks, 0, 1, [0.0; 3]);
    let two = glue(chunks, &classes).unwrap();
    let b = random(two.complex.num_edges(), &mut rng);
    let two_res = union_one_lap_solve(&two, &b, eps).map(|(x, _)| contract_residual(&two.complex, &x, &b));

    let chunks: Vec<Chunk> = (0..4).map(|_| grid_chunk([4, 2, 2], [0.0; 3])).collect();
    let mut classes = Vec::new();
    for i in 0..4 {
        classes.extend(coincident_classes(&chunks, i, (i + 1) % 4, [4.0, 0.0, 0.0]));
    }
    let ring = glue(chunks, &classes).unwrap();
    let ring_betti = betti_numbers(&ring.complex).unwrap();
    let b = random(ring.complex.num_edges(), &mut rng);
    let ring_res = union_one_lap_solve(&ring, &b, eps).map(|(x, _)| contract_residual(&ring.complex, &x, &b));

    let all = corpus();
    let mesh = all.iter().find(|m| m.name == "cavity 8x3x3").unwrap();
    let (c, h) = (&mesh.complex, mesh.hollowing());
    let single = glue(vec![Chunk { complex: c.clone(), hollowing: h.clone() }], &[]).unwrap();
    let b = random(c.num_edges(), &mut rng);
    let x_direct = OneLapSolver::new(c, &h).unwrap().solve(&b, eps).unwrap().0;
    let x_union = union_one_lap_solve(&single, &b, eps).unwrap().0;
    let proj = oracle::projection(&from_sparse(&one_laplacian(c))).unwrap();
    let single_diff = norm(&mat_vec(&proj, &sub(&x_direct, &x_union))) / norm(&x_direct);

    let pass = matches!(two_res, Ok(r) if r <= eps)
        && matches!(ring_res, Ok(r) if r <= eps)
        && ring_betti == (1, 1, 0)
        && single_diff <= 1e-8;
    Outcome::new(
        pass,
        format!(
            "two chunks {}, ring of four {} (betti {ring_betti:?}), single chunk ({}) difference {single_diff:.2e}",
            show(&two_res),
            show(&ring_res),
            mesh.name
        ),
    )
}

fn fast_path_parity() -> Outcome {
    let eps = 1e-6;
    let mut lines = Vec::new();
    let mut pass = true;
    for (side, r, seed) in [(8usize, 128.0, 3u64), (10, 512.0, 4)] {
        let c = random_weights(&gen_grid(&GridSpec::solid(side, side, side)).unwrap(), 0.5, 2.0, seed);
        let h = sphere_hollowing(&c, r).unwrap();
        let l = up_laplacian(&c, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1100 + seed);
        let b = l.mul_vec(&random(c.num_edges(), &mut rng));
        let res = |x: &[f64]| norm(&sub(&l.mul_vec(x), &b)) / norm(&b);
        let slow = up_lap_solve(&c, &h, &b, eps).map(|x| res(&x));
        let fast = up_lap_solve_fast(&c, &h, &b, eps).map(|x| res(&x));
        let s = build_sphere_fast_solver(&c, &h).unwrap();
        let bt = s.l_t.mul_vec(&random(s.c_edges.len(), &mut rng));
        let xt = s.precond.apply(&bt);
        let reduced = norm(&sub(&s.l_t.mul_vec(&xt), &bt)) / norm(&bt);
        pass &= matches!(slow, Ok(v) if v <= eps) && matches!(fast, Ok(v) if v <= eps) && reduced <= 1e-8;
        lines.push(format!(
            "{side}^3 r={r} ({} regions): slow {}, fast {}, reduced solve {reduced:.2e}",
            h.num_regions,
            show(&slow),
            show(&fast)
        ));
    }
    Outcome::new(pass, lines.join("; "))
}

/// Best of `reps` end-to-end runs: hollowing, preprocessing and one solve.
fn timed_solve(c: &Complex3, r: f64, b: &[f64], eps: f64, reps: usize) -> (f64, f64) {
    let mut best = f64::INFINITY;
    let mut residual = 0.0;
    for _ in 0..reps {
        let t0 = Instant::now();
        let h = find_hollowing(c, r).unwrap();
        let solver = OneLapSolver::new(c, &h).unwrap();
        let (_, rep) = solver.solve(b, eps).unwrap();
        best = best.min(t0.elapsed().as_secs_f64());
        residual = rep.relative_residual;
    }
    (best, residual)
}

fn runtime_trend() -> Outcome {
    let eps = 1e-6;
    let (mut ns, mut ts) = (Vec::new(), Vec::new());
    let mut lines = Vec::new();
    let mut pass = true;
    for side in [7usize, 10, 15] {
        let c = gen_grid(&GridSpec::solid(side, side, side)).unwrap();
        let n = c.num_simplexes() as f64;
        // The hollowing counts r in vertices.
        let r = (c.num_vertices() as f64).powf(0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(1200 + side as u64);
        let b = random(c.num_edges(), &mut rng);
        let (t, res) = timed_solve(&c, r, &b, eps, 3);
        pass &= res <= eps;
        lines.push(format!("n={n} vertices={} r={r:.0} t={t:.3}s", c.num_vertices()));
        ns.push(n);
        ts.push(t);
    }
    let slope = log_slope(&ns, &ts);
    pass &= slope <= 1.9;
    Outcome::new(pass, format!("{}; fitted exponent {slope:.3}", lines.join(", ")))
}

#[test]
fn acceptance() {
    let corpus = corpus();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("structural exactness", Box::new(|| structural_exactness(&corpus))),
        ("oracle equivalence", Box::new(|| oracle_equivalence(&corpus))),
        ("down-solver exactness", Box::new(|| down_solver_exactness(&corpus))),
        ("spectral bound", Box::new(spectral_bound)),
        ("pcg iteration scaling", Box::new(pcg_iteration_scaling)),
        ("up-projection correctness", Box::new(|| up_projection_correctness(&corpus))),
        ("lambda_min diameter bound", Box::new(lambda_min_diameter)),
        ("betti diagnostics", Box::new(|| betti_diagnostics(&corpus))),
        ("hodge orthogonality", Box::new(|| hodge_orthogonality(&corpus))),
        ("union solver", Box::new(union_solver)),
        ("fast path parity", Box::new(fast_path_parity)),
        ("runtime trend", Box::new(runtime_trend)),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        // Written to the raw handle so the lines survive output capture.
        let _ = writeln!(
            std::io::stderr().lock(),
            "[{tag}] {:2} {name}: {} ({:.1}s)",
            k + 1,
            out.detail,
            t0.elapsed().as_secs_f64()
        );
        if !out.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
