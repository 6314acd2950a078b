use nalgebra as na;
use serde::{Deserialize, Serialize};

use crate::femspaces::{CellGeometry, PiecewiseField};
use crate::meshkit::SimplicialComplex;
use crate::{Error, Point, Result};

/// Piecewise affine map from a reference mesh onto a physical mesh with the
/// same connectivity: `F_c(x̂) = J_c x̂ + b_c` on every cell.
#[derive(Clone, Debug)]
pub struct AffineCellMap {
    pub reference: SimplicialComplex,
    pub physical: SimplicialComplex,
    pub jacobians: Vec<na::Matrix3<f64>>,
    pub shifts: Vec<Point>,
}

impl AffineCellMap {
    /// Map between two meshes sharing the cell-to-vertex arrays. Every
    /// Jacobian must have a positive determinant.
    pub fn new(reference: SimplicialComplex, physical: SimplicialComplex) -> Result<Self> {
        if reference.cells() != physical.cells() {
            return Err(Error::LayerMismatch("meshes do not share their connectivity".into()));
        }
        let mut jacobians = Vec::with_capacity(reference.num_cells());
        let mut shifts = Vec::with_capacity(reference.num_cells());
        for c in 0..reference.num_cells() {
            let xr = reference.cell_points(c);
            let xp = physical.cell_points(c);
            let er = na::Matrix3::from_columns(&[xr[1] - xr[0], xr[2] - xr[0], xr[3] - xr[0]]);
            let ep = na::Matrix3::from_columns(&[xp[1] - xp[0], xp[2] - xp[0], xp[3] - xp[0]]);
            let inv = er.try_inverse().ok_or(Error::DegenerateCell { cell: c, det: 0.0 })?;
            let j = ep * inv;
            if j.determinant() <= 0.0 {
                return Err(Error::OrientationFlip { cell: c });
            }
            shifts.push(xp[0] - j * xr[0]);
            jacobians.push(j);
        }
        Ok(AffineCellMap {
            reference,
            physical,
            jacobians,
            shifts,
        })
    }

    /// One global affine map `x ↦ J x + b` applied to every vertex.
    pub fn global(reference: SimplicialComplex, j: na::Matrix3<f64>, b: Point) -> Result<Self> {
        let verts = reference.vertices().iter().map(|x| j * x + b).collect();
        let physical = crate::meshkit::build_complex(verts, reference.cells())?;
        Self::new(reference, physical)
    }

    pub fn apply(&self, c: usize, x: &Point) -> Point {
        self.jacobians[c] * x + self.shifts[c]
    }

    pub fn det(&self, c: usize) -> f64 {
        self.jacobians[c].determinant()
    }
}

/// Field `x ↦ value + slope x` on one cell. Scalars (form degrees 0 and 3)
/// use the first component and the first row of the slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub form_degree: usize,
    pub value: Point,
    pub slope: na::Matrix3<f64>,
}

impl AffineField {
    pub fn eval(&self, x: &Point) -> Point {
        self.value + self.slope * x
    }

    /// Affine form of a Whitney field restricted to cell `c`.
    pub fn from_cell(complex: &SimplicialComplex, c: usize, u: &PiecewiseField) -> Result<AffineField> {
        let x = complex.cell_points(c);
        let g = CellGeometry::new(x);
        let corner = |i: usize| {
            let mut lam = [0.0; 4];
            lam[i] = 1.0;
            u.eval_with(complex, c, &g, &lam)
        };
        let v: Vec<Point> = (0..4).map(corner).collect();
        let e = na::Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let dv = na::Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let slope = dv * e.try_inverse().ok_or(Error::DegenerateCell { cell: c, det: 0.0 })?;
        Ok(AffineField {
            form_degree: u.form_degree,
            value: v[0] - slope * x[0],
            slope,
        })
    }

    /// Exterior derivative: gradient, curl or divergence (constant fields).
    pub fn derivative(&self) -> Result<AffineField> {
        let m = &self.slope;
        let value = match self.form_degree {
            0 => Point::new(m[(0, 0)], m[(0, 1)], m[(0, 2)]),
            1 => Point::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]),
            2 => Point::new(m.trace(), 0.0, 0.0),
            _ => return Err(Error::DegreeMismatch { expected: 2, found: 3 }),
        };
        Ok(AffineField {
            form_degree: self.form_degree + 1,
            value,
            slope: na::Matrix3::zeros(),
        })
    }
}

/// Pointwise factor of the Piola transformation of degree `l`:
/// `ψ⁰ = 1`, `ψ¹ = Jᵀ`, `ψ² = det(J) J⁻¹`, `ψ³ = det(J)`.
fn factor(l: usize, j: &na::Matrix3<f64>) -> na::Matrix3<f64> {
    let det = j.determinant();
    match l {
        0 => na::Matrix3::identity(),
        1 => j.transpose(),
        2 => det * j.try_inverse().expect("invertible jacobian"),
        _ => det * na::Matrix3::identity(),
    }
}

fn scalar_mask(l: usize, m: na::Matrix3<f64>) -> na::Matrix3<f64> {
    if l == 0 || l == 3 {
        // only the first component carries a scalar
        let mut out = na::Matrix3::zeros();
        out[(0, 0)] = m[(0, 0)];
        out
    } else {
        m
    }
}

/// Pull-back `ψ^l_c(u)` of an affine field on physical cell `c` to the
/// reference cell: `x̂ ↦ P (u ∘ F_c)(x̂)` with `P` the Piola factor.
pub fn piola(map: &AffineCellMap, c: usize, u: &AffineField) -> Result<AffineField> {
    let j = &map.jacobians[c];
    if j.determinant() <= 0.0 {
        return Err(Error::OrientationFlip { cell: c });
    }
    let p = scalar_mask(u.form_degree, factor(u.form_degree, j));
    Ok(AffineField {
        form_degree: u.form_degree,
        value: p * (u.value + u.slope * map.shifts[c]),
        slope: p * u.slope * j,
    })
}

/// Inverse Piola transformation, from the reference cell back to cell `c`.
pub fn piola_inverse(map: &AffineCellMap, c: usize, u: &AffineField) -> Result<AffineField> {
    let j = &map.jacobians[c];
    if j.determinant() <= 0.0 {
        return Err(Error::OrientationFlip { cell: c });
    }
    let jinv = j.try_inverse().expect("invertible jacobian");
    let pinv = scalar_mask(u.form_degree, factor(u.form_degree, j).try_inverse().expect("invertible factor"));
    // x̂ = J⁻¹ (x − b)
    let shift = -(jinv * map.shifts[c]);
    Ok(AffineField {
        form_degree: u.form_degree,
        value: pinv * (u.value + u.slope * shift),
        slope: pinv * u.slope * jinv,
    })
}

/// Weight making the Piola map an isometry: `det(J)(JᵀJ)⁻¹` for `l = 1`,
/// its inverse for `l = 2`.
pub fn rho(l: usize, j: &na::Matrix3<f64>) -> Result<na::Matrix3<f64>> {
    let det = j.determinant();
    let jtj = j.transpose() * j;
    match l {
        1 => Ok(det * jtj.try_inverse().expect("invertible jacobian")),
        2 => Ok(jtj / det),
        _ => Err(Error::DegreeMismatch { expected: 1, found: l }),
    }
}

/// `|⟨u, v⟩_ω − ⟨ϱ ψ(u), ψ(v)⟩_ω̂| / |⟨u, v⟩_ω|` for fields on the physical
/// mesh, both sides by cell quadrature.
pub fn piola_weighted_identity_check(map: &AffineCellMap, u: &PiecewiseField, v: &PiecewiseField, l: usize) -> Result<f64> {
    if u.form_degree != l || v.form_degree != l {
        return Err(Error::DegreeMismatch {
            expected: l,
            found: if u.form_degree != l { u.form_degree } else { v.form_degree },
        });
    }
    let rule = crate::femspaces::tet_rule();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for c in 0..map.physical.num_cells() {
        let gp = CellGeometry::of_cell(&map.physical, c);
        let gr = CellGeometry::of_cell(&map.reference, c);
        let fu = piola(map, c, &AffineField::from_cell(&map.physical, c, u)?)?;
        let fv = piola(map, c, &AffineField::from_cell(&map.physical, c, v)?)?;
        let r = rho(l, &map.jacobians[c])?;
        for (p, w) in rule.unit_weights() {
            lhs += w * gp.volume * u.eval_with(&map.physical, c, &gp, p).dot(&v.eval_with(&map.physical, c, &gp, p));
            let x = gr.point(p);
            rhs += w * gr.volume * (r * fu.eval(&x)).dot(&fv.eval(&x));
        }
    }
    Ok((lhs - rhs).abs() / lhs.abs())
}

/// `max |d(ψ^l u) − ψ^{l+1}(d u)|` over the slope and value entries,
/// relative to the size of `ψ^{l+1}(d u)`.
pub fn piola_commutation_residual(map: &AffineCellMap, c: usize, u: &AffineField) -> Result<f64> {
    let lhs = piola(map, c, u)?.derivative()?;
    let rhs = piola(map, c, &u.derivative()?)?;
    let diff = (lhs.value - rhs.value).amax().max((lhs.slope - rhs.slope).amax());
    Ok(diff / rhs.value.amax().max(rhs.slope.amax()).max(f64::MIN_POSITIVE))
}
