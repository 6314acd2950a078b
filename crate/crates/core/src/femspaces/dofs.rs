use super::field::{PiecewiseField, PointField};
use super::quadrature::{line_rule, triangle_rule, tet_rule};
use super::sparse::SparseMatrix;
use super::whitney::{basis_degree, eval_basis, num_local, CellGeometry};
use crate::meshkit::{AlfeldComplex, OrientedSimplex, SimplicialComplex};
use crate::{Error, Point, Result};

/// Canonical degree of freedom of simplex `id` (dimension `dim`) applied to
/// a pointwise field whose relevant integrand has polynomial degree
/// `degree`: point value, tangential line integral along `x1 - x0`, flux
/// through the face with normal along `(x1 - x0) x (x2 - x0)`, or cell
/// integral times the orientation sign.
pub fn dof_of_fn(
    complex: &SimplicialComplex,
    dim: usize,
    id: usize,
    f: &dyn Fn(&Point) -> Point,
    degree: usize,
) -> Result<f64> {
    let verts = complex.simplex_vertices(dim, id);
    let x: Vec<Point> = verts.iter().map(|&v| complex.vertex(v)).collect();
    Ok(match dim {
        0 => f(&x[0]).x,
        1 => {
            let rule = line_rule();
            rule.require(degree)?;
            let t = x[1] - x[0];
            rule.unit_weights()
                .map(|(p, w)| w * f(&(x[0] * p[0] + x[1] * p[1])).dot(&t))
                .sum()
        }
        2 => {
            let rule = triangle_rule();
            rule.require(degree)?;
            let n = (x[1] - x[0]).cross(&(x[2] - x[0])) * 0.5;
            rule.unit_weights()
                .map(|(p, w)| w * f(&(x[0] * p[0] + x[1] * p[1] + x[2] * p[2])).dot(&n))
                .sum()
        }
        _ => {
            let rule = tet_rule();
            rule.require(degree)?;
            let g = CellGeometry::of_cell(complex, id);
            g.sign
                * g.volume
                * rule
                    .unit_weights()
                    .map(|(p, w)| w * f(&g.point(p)).x)
                    .sum::<f64>()
        }
    })
}

/// Canonical degree of freedom of `sigma` applied to a pointwise field.
pub fn canonical_dof(complex: &SimplicialComplex, sigma: &OrientedSimplex, u: &PointField) -> Result<f64> {
    if sigma.dim() != u.form_degree {
        return Err(Error::DimensionMismatch {
            expected: u.form_degree,
            found: sigma.dim(),
        });
    }
    let id = complex
        .find(sigma)
        .ok_or_else(|| Error::UnknownSimplex(sigma.vertices().to_vec()))?;
    dof_of_fn(complex, sigma.dim(), id, &|x| u.eval(x), u.degree)
}

/// Canonical degree of freedom of `sigma` applied to a discrete field,
/// evaluated by quadrature inside one cell containing `sigma`.
pub fn canonical_dof_field(
    complex: &SimplicialComplex,
    sigma: &OrientedSimplex,
    u: &PiecewiseField,
) -> Result<f64> {
    if sigma.dim() != u.form_degree {
        return Err(Error::DimensionMismatch {
            expected: u.form_degree,
            found: sigma.dim(),
        });
    }
    let id = complex
        .find(sigma)
        .ok_or_else(|| Error::UnknownSimplex(sigma.vertices().to_vec()))?;
    let cell = *complex
        .vertex_cells(sigma.vertices()[0])
        .iter()
        .find(|&&c| sigma.vertices().iter().all(|v| complex.cells()[c].contains(v)))
        .expect("simplex of the complex lies in a cell");
    let g = CellGeometry::of_cell(complex, cell);
    let f = |x: &Point| u.eval_with(complex, cell, &g, &g.barycentric(x));
    dof_of_fn(complex, sigma.dim(), id, &f, basis_degree(u.form_degree))
}

/// Coefficients in the split complex of the base Whitney basis of degree
/// `l` (rows: split simplices, columns: base simplices). The spaces are
/// nested, so this is an exact change of basis.
pub fn prolongation(base: &SimplicialComplex, alfeld: &AlfeldComplex, l: usize) -> SparseMatrix {
    let fine = &alfeld.complex;
    let mut p = SparseMatrix::zeros(fine.count(l), base.count(l));
    for t in 0..base.num_cells() {
        let g = CellGeometry::of_cell(base, t);
        let base_ids = base.cell_subsimplices(l, t);
        for c in alfeld.children(t) {
            for &s in fine.cell_subsimplices(l, c) {
                for j in 0..num_local(l) {
                    let v = if l == 3 {
                        fine.orientation(c) * g.sign * fine.volume(c) / g.volume
                    } else {
                        let f = |x: &Point| eval_basis(l, &g, &g.barycentric(x))[j];
                        dof_of_fn(fine, l, s, &f, 1).expect("degree one is resolved")
                    };
                    if v.abs() > 1e-15 {
                        p.set(s, base_ids[j], v);
                    }
                }
            }
        }
    }
    p
}
