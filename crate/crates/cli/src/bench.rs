//! Scaling benchmark over generated grids.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hollowlap::hollowing::{find_hollowing, sphere_hollowing};
use hollowlap::mesh_gen::{gen_grid, GridSpec, HoleKind};
use hollowlap::one_lap::OneLapSolver;
use hollowlap::Result;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    /// Solid cube of side `s` cells.
    Grid,
    /// Cube with a central 2-cell cavity.
    Cavity,
}

/// Hollowing parameter as a function of the vertex count `n`, the unit of `r`.
#[derive(Clone, Copy, Debug)]
pub enum RRule {
    /// `r = n^{3/5}`.
    N35,
    Fixed(f64),
}

impl FromStr for RRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "n35" => Ok(RRule::N35),
            _ => s.parse().map(RRule::Fixed).map_err(|_| format!("expected 'n35' or a number, got '{s}'")),
        }
    }
}

impl RRule {
    pub fn r(self, n: usize) -> f64 {
        match self {
            RRule::N35 => (n as f64).powf(0.6),
            RRule::Fixed(r) => r,
        }
    }
}

/// One CSV row; the first six columns are the fixed schema.
#[derive(Debug, Serialize)]
pub struct Row {
    pub n: usize,
    pub r: f64,
    pub t_preprocess: f64,
    pub t_solve: f64,
    pub pcg_iters_schur: usize,
    pub kappa_est: f64,
    pub size: usize,
    pub edges: usize,
    pub regions: usize,
    pub chunks: usize,
    pub relative_residual: f64,
}

fn spec(family: Family, s: usize) -> GridSpec {
    match family {
        Family::Grid => GridSpec::solid(s, s, s),
        Family::Cavity => {
            let lo = s / 2 - 1;
            GridSpec::solid(s, s, s).with_hole([lo; 3], [lo + 2; 3], HoleKind::Cavity)
        }
    }
}

pub fn run(family: Family, sizes: &[usize], rule: RRule, eps: f64, seed: u64, sphere: bool) -> Result<Vec<Row>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let c = gen_grid(&spec(family, s))?;
        let n = c.num_vertices();
        let r = rule.r(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ s as u64);
        let b: Vec<f64> = (0..c.num_edges()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t0 = Instant::now();
        let h = if sphere { sphere_hollowing(&c, r)? } else { find_hollowing(&c, r)? };
        let solver = OneLapSolver::new(&c, &h)?;
        let t_preprocess = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let (_, rep) = solver.solve(&b, eps)?;
        let t_solve = t1.elapsed().as_secs_f64();
        let (lo, hi) = solver.up.relative_spectrum(50);
        rows.push(Row {
            n,
            r,
            t_preprocess,
            t_solve,
            pcg_iters_schur: rep.up_solve.as_ref().map_or(0, |u| u.pcg.iterations),
            kappa_est: if lo > 0.0 { hi / lo } else { f64::INFINITY },
            size: s,
            edges: c.num_edges(),
            regions: solver.up.num_regions(),
            chunks: 1,
            relative_residual: rep.relative_residual,
        });
    }
    Ok(rows)
}

pub fn write_csv(path: &Path, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
