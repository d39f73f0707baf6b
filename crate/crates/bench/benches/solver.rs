use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hollowlap::complex::one_laplacian;
use hollowlap::nested_dissection::nd_factor;
use hollowlap::one_lap::OneLapSolver;
use hollowlap_bench::{cavity_grid, random_rhs, surface_hollowing};

const SIZES: [usize; 3] = [6, 8, 10];

fn bench_preprocess(c: &mut Criterion) {
    let mut group = c.benchmark_group("preprocess");
    group.sample_size(10);
    for s in SIZES {
        let mesh = cavity_grid(s);
        let h = surface_hollowing(&mesh);
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, _| {
            b.iter(|| OneLapSolver::new(&mesh, &h).expect("solver builds"))
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for s in SIZES {
        let mesh = cavity_grid(s);
        let h = surface_hollowing(&mesh);
        let solver = OneLapSolver::new(&mesh, &h).expect("solver builds");
        let rhs = random_rhs(mesh.num_edges(), s as u64);
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, _| {
            b.iter(|| solver.solve(&rhs, 1e-6).expect("solve converges"))
        });
    }
    group.finish();
}

fn bench_nd_factor(c: &mut Criterion) {
    let mut group = c.benchmark_group("nd_factor");
    group.sample_size(10);
    for s in SIZES {
        let mesh = cavity_grid(s);
        let l1 = one_laplacian(&mesh);
        let points: Vec<_> = (0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, _| {
            b.iter(|| nd_factor(&l1, &points, None).expect("factor succeeds"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_preprocess, bench_solve, bench_nd_factor);
criterion_main!(benches);
