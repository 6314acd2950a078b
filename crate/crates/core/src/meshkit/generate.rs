use super::{build_complex, SimplicialComplex};
use crate::Point;

/// Unit cube split into `n^3` sub-cubes, each cut into six tetrahedra along
/// its main diagonal (Kuhn split), which is conforming across sub-cubes.
pub fn gen_cube_mesh(n: usize) -> SimplicialComplex {
    cube_mesh(n, false)
}

/// Kuhn split with every sub-cube mirrored along the axes where its index
/// is odd, so neighbouring diagonals meet symmetrically. Still conforming;
/// boundary patches of this mesh avoid the pinched trace surfaces that the
/// plain Kuhn split produces.
pub fn gen_cube_mesh_reflected(n: usize) -> SimplicialComplex {
    cube_mesh(n, true)
}

fn cube_mesh(n: usize, reflect: bool) -> SimplicialComplex {
    assert!(n >= 1, "at least one subdivision per axis");
    let m = n + 1;
    let idx = |c: [usize; 3]| c[0] + m * (c[1] + m * c[2]);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let base = [i, j, k];
                let flip = |a: usize| reflect && base[a] % 2 == 1;
                // corner of the sub-cube at local offsets `c`
                let corner = |c: [usize; 3]| {
                    let mut q = base;
                    for a in 0..3 {
                        q[a] += if flip(a) { 1 - c[a] } else { c[a] };
                    }
                    idx(q)
                };
                for p in PERMS {
                    let mut c = [0; 3];
                    let mut tet = [corner(c); 4];
                    for (s, &axis) in p.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = corner(c);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    build_complex(vertices, &tets).expect("Kuhn split is a valid conforming mesh")
}

/// Single tetrahedron with the given vertices.
pub fn single_tet(x: [Point; 4]) -> crate::Result<SimplicialComplex> {
    build_complex(x.to_vec(), &[[0, 1, 2, 3]])
}

/// The unit reference tetrahedron.
pub fn reference_tet() -> SimplicialComplex {
    single_tet([
        Point::new(0.0, 0.0, 0.0),
        Point::new(1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
    ])
    .expect("reference tetrahedron")
}
