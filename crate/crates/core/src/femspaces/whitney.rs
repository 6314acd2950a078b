use nalgebra as na;

use crate::meshkit::{signed_det, SimplicialComplex, LOCAL_EDGES, LOCAL_FACES};
use crate::Point;

/// Number of local Whitney basis functions of form degree `l` on a cell.
pub const fn num_local(l: usize) -> usize {
    match l {
        0 => 4,
        1 => 6,
        2 => 4,
        _ => 1,
    }
}

/// Number of proxy components of an `l`-form (1 for scalars, 3 for vectors).
pub const fn components(l: usize) -> usize {
    if l == 1 || l == 2 {
        3
    } else {
        1
    }
}

/// Affine geometry of one tetrahedron: vertices, constant barycentric
/// gradients, volume and orientation sign.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub x: [Point; 4],
    pub grad: [Point; 4],
    pub volume: f64,
    pub sign: f64,
}

impl CellGeometry {
    pub fn new(x: [Point; 4]) -> CellGeometry {
        let det = signed_det(&x);
        let jac = na::Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let inv = jac.try_inverse().expect("non-degenerate cell");
        let g1: Point = inv.row(0).transpose();
        let g2: Point = inv.row(1).transpose();
        let g3: Point = inv.row(2).transpose();
        CellGeometry {
            x,
            grad: [-(g1 + g2 + g3), g1, g2, g3],
            volume: det.abs() / 6.0,
            sign: det.signum(),
        }
    }

    pub fn of_cell(complex: &SimplicialComplex, c: usize) -> CellGeometry {
        CellGeometry::new(complex.cell_points(c))
    }

    pub fn point(&self, lam: &[f64; 4]) -> Point {
        self.x[0] * lam[0] + self.x[1] * lam[1] + self.x[2] * lam[2] + self.x[3] * lam[3]
    }

    pub fn barycentric(&self, p: &Point) -> [f64; 4] {
        let d = p - self.x[0];
        let l1 = self.grad[1].dot(&d);
        let l2 = self.grad[2].dot(&d);
        let l3 = self.grad[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }
}

/// Values of the local Whitney basis of degree `l` at barycentric point
/// `lam`. Scalar forms are returned in the first component.
pub fn eval_basis(l: usize, g: &CellGeometry, lam: &[f64; 4]) -> [Point; 6] {
    let mut out = [Point::zeros(); 6];
    match l {
        0 => {
            for i in 0..4 {
                out[i].x = lam[i];
            }
        }
        1 => {
            for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
                out[k] = g.grad[*j] * lam[*i] - g.grad[*i] * lam[*j];
            }
        }
        2 => {
            for (k, [i, j, m]) in LOCAL_FACES.iter().enumerate() {
                let (gi, gj, gm) = (g.grad[*i], g.grad[*j], g.grad[*m]);
                out[k] = (gj.cross(&gm) * lam[*i] + gm.cross(&gi) * lam[*j] + gi.cross(&gj) * lam[*m]) * 2.0;
            }
        }
        _ => out[0].x = g.sign / g.volume,
    }
    out
}

/// Exterior derivative of the local Whitney basis of degree `l < 3`
/// (gradient, curl or divergence), constant on the cell.
pub fn eval_derivative(l: usize, g: &CellGeometry) -> [Point; 6] {
    let mut out = [Point::zeros(); 6];
    match l {
        0 => out[..4].copy_from_slice(&g.grad),
        1 => {
            for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
                out[k] = g.grad[*i].cross(&g.grad[*j]) * 2.0;
            }
        }
        2 => {
            for (k, [i, j, m]) in LOCAL_FACES.iter().enumerate() {
                out[k].x = 6.0 * g.grad[*i].dot(&g.grad[*j].cross(&g.grad[*m]));
            }
        }
        _ => {}
    }
    out
}

/// Polynomial degree of the Whitney basis of degree `l`.
pub const fn basis_degree(l: usize) -> usize {
    if l == 3 {
        0
    } else {
        1
    }
}
