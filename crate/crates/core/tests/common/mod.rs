#![allow(dead_code)]

use localproj::meshkit::{build_complex, gen_cube_mesh, SimplicialComplex};
use localproj::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cube mesh with interior vertices moved by up to `amp` times the mesh size.
pub fn jittered_cube(n: usize, amp: f64, seed: u64) -> SimplicialComplex {
    let base = gen_cube_mesh(n);
    let mut r = rng(seed);
    let h = 1.0 / n as f64;
    let verts: Vec<Point> = base
        .vertices()
        .iter()
        .map(|p| {
            let mut q = *p;
            for k in 0..3 {
                if p[k] > 1e-12 && p[k] < 1.0 - 1e-12 {
                    q[k] += amp * h * (r.gen::<f64>() - 0.5);
                }
            }
            q
        })
        .collect();
    build_complex(verts, base.cells()).unwrap()
}

/// Falling factorial based closed form of `∫ x^a y^b z^c` over the unit
/// reference tetrahedron.
pub fn tet_monomial(a: u32, b: u32, c: u32) -> f64 {
    fact(a) * fact(b) * fact(c) / fact(a + b + c + 3)
}

pub fn tri_monomial(a: u32, b: u32) -> f64 {
    fact(a) * fact(b) / fact(a + b + 2)
}

pub fn fact(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn random_point(r: &mut impl Rng) -> Point {
    Point::new(r.gen(), r.gen(), r.gen())
}

/// Random barycentric coordinates strictly inside a cell.
pub fn random_bary(r: &mut impl Rng) -> [f64; 4] {
    let w: [f64; 4] = [r.gen::<f64>() + 0.05, r.gen::<f64>() + 0.05, r.gen::<f64>() + 0.05, r.gen::<f64>() + 0.05];
    let s: f64 = w.iter().sum();
    [w[0] / s, w[1] / s, w[2] / s, w[3] / s]
}
