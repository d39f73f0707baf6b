//! Command line front end: mesh generation, validation, hollowing, solves and benchmarks.

mod bench;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hollowlap::complex::{read_complex, validate, write_complex};
use hollowlap::hollowing::{find_hollowing, hollowing_stats, sphere_hollowing, Hollowing, HollowingKind};
use hollowlap::mesh_gen::{gen_grid, mesh_stats, random_weights, GridSpec};
use hollowlap::one_lap::{read_union, OneLapSolver};
use hollowlap::Error;

use report::{MeshCounts, SolveReport, Timings};

#[derive(Parser)]
#[command(name = "hollowlap", version, about = "1-Laplacian solver for well-shaped 3-complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Kuhn grid mesh from a grid spec file.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check boundary identities, closure and weights.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Compute an r-hollowing.
    Hollow {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        r: f64,
        /// Build a sphere hollowing instead of a shell hollowing.
        #[arg(long)]
        sphere: bool,
        /// Use a single region (shell) or the exterior surface (with --sphere) as the boundary.
        #[arg(long)]
        trivial: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve L₁ x = Π₁ b.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        holl: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Split a 1-chain into gradient, curl and harmonic parts.
    Hodge {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        holl: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve on a union of glued chunks.
    UnionSolve {
        #[arg(long)]
        union: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time preprocessing and solves over a family of meshes.
    Bench {
        #[arg(long, default_value = "grid")]
        family: bench::Family,
        /// Grid side lengths in cells.
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "n35")]
        r_rule: bench::RRule,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sphere: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Grid spec file: a grid plus optional random weights.
#[derive(Deserialize)]
struct GenSpec {
    #[serde(flatten)]
    grid: GridSpec,
    #[serde(default)]
    weights: Option<WeightRange>,
}

#[derive(Deserialize)]
struct WeightRange {
    lo: f64,
    hi: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    valid: bool,
    violations: &'a [String],
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnsupportedGeometry(_) => 4,
            Error::NotPsd(_)
            | Error::NotSymmetric(_)
            | Error::NotInImage(_)
            | Error::NotConverged(_)
            | Error::SizeCap { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> std::result::Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    std::fs::write(path, serde_json::to_string(value)?)?;
    Ok(())
}

fn read_vector(path: &Path, n: usize) -> std::result::Result<Vec<f64>, Failure> {
    let v: Vec<f64> = read_json(path)?;
    if v.len() != n {
        return Err(Failure { code: 2, message: format!("{}: {} entries, expected {n}", path.display(), v.len()) });
    }
    Ok(v)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen { spec, out } => {
            let spec: GenSpec = read_json(&spec)?;
            let mut c = gen_grid(&spec.grid)?;
            if let Some(w) = spec.weights {
                c = random_weights(&c, w.lo, w.hi, w.seed);
            }
            write_complex(&c, &out)?;
            println!("{}", serde_json::to_string(&mesh_stats(&c))?);
            Ok(())
        }
        Command::Validate { mesh } => {
            let c = read_complex(&mesh)?;
            let violations = validate(&c);
            println!("{}", serde_json::to_string(&ValidationOutput { valid: violations.is_empty(), violations: &violations })?);
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Failure { code: 2, message: format!("{} violations", violations.len()) })
            }
        }
        Command::Hollow { mesh, r, sphere, trivial, out } => {
            let c = read_complex(&mesh)?;
            let h = match (trivial, sphere) {
                (true, false) => Hollowing::trivial(&c, r, HollowingKind::Shell),
                (true, true) => Hollowing::trivial(&c, r, HollowingKind::Sphere),
                (false, true) => sphere_hollowing(&c, r)?,
                (false, false) => find_hollowing(&c, r)?,
            };
            h.write(&out)?;
            println!("{}", serde_json::to_string(&hollowing_stats(&c, &h))?);
            Ok(())
        }
        Command::Solve { mesh, holl, b, eps, out, report } => {
            let c = read_complex(&mesh)?;
            let h = Hollowing::read(&holl)?;
            let b = read_vector(&b, c.num_edges())?;
            let t0 = Instant::now();
            let solver = OneLapSolver::new(&c, &h)?;
            let t_pre = t0.elapsed().as_secs_f64();
            solve_and_report(&solver, &b, eps, h.r, 1, t_pre, &out, report.as_deref())
        }
        Command::Hodge { mesh, holl, f, eps, out } => {
            let c = read_complex(&mesh)?;
            let h = Hollowing::read(&holl)?;
            let f = read_vector(&f, c.num_edges())?;
            let parts = OneLapSolver::new(&c, &h)?.hodge(&f, eps)?;
            write_json(&out, &parts)
        }
        Command::UnionSolve { union, b, eps, out, report } => {
            let t0 = Instant::now();
            let u = read_union(&union)?;
            let b = read_vector(&b, u.complex.num_edges())?;
            let solver = u.solver()?;
            let t_pre = t0.elapsed().as_secs_f64();
            solve_and_report(&solver, &b, eps, u.hollowing.r, u.num_chunks(), t_pre, &out, report.as_deref())
        }
        Command::Bench { family, sizes, r_rule, eps, seed, sphere, out } => {
            let rows = bench::run(family, &sizes, r_rule, eps, seed, sphere)?;
            bench::write_csv(&out, &rows).map_err(|e| Failure { code: 2, message: e.to_string() })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_and_report(
    solver: &OneLapSolver<'_>,
    b: &[f64],
    eps: f64,
    r: f64,
    chunks: usize,
    t_preprocess: f64,
    out: &Path,
    report_path: Option<&Path>,
) -> CmdResult {
    let c = solver.complex;
    let mut rep = SolveReport {
        eps,
        r,
        chunks,
        mesh: MeshCounts::of(c),
        timings: Timings { preprocess: t_preprocess, solve: 0.0 },
        ..Default::default()
    };
    let t1 = Instant::now();
    let result = solver.solve_full(b, eps);
    rep.timings.solve = t1.elapsed().as_secs_f64();
    match result {
        Ok(sol) => {
            rep.fill(solver, &sol);
            write_json(out, &sol.x)?;
            if let Some(p) = report_path {
                write_json(p, &rep)?;
            }
            println!("{}", serde_json::to_string(&rep.summary())?);
            Ok(())
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            if let Some(p) = report_path {
                write_json(p, &rep)?;
            }
            Err(e.into())
        }
    }
}
