//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hollowlap::complex::Complex3;
use hollowlap::hollowing::{Hollowing, HollowingKind};
use hollowlap::mesh_gen::{gen_grid, GridSpec, HoleKind};

/// Cube of side `s` cells with a central 2-cell cavity.
pub fn cavity_grid(s: usize) -> Complex3 {
    let lo = s / 2 - 1;
    gen_grid(&GridSpec::solid(s, s, s).with_hole([lo; 3], [lo + 2; 3], HoleKind::Cavity)).expect("valid grid")
}

/// Sphere hollowing on the exterior surface with `r = n^{3/5}`.
pub fn surface_hollowing(c: &Complex3) -> Hollowing {
    let r = (c.num_vertices() as f64).powf(0.6);
    Hollowing::trivial(c, r, HollowingKind::Sphere)
}

pub fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
