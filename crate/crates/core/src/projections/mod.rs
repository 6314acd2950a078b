//! Projections onto the global lowest-order spaces whose coefficients are
//! pairings with the local weights.

mod stability;

use rayon::prelude::*;

pub use stability::{local_stability_constant, probe_count, stability_constants, StabilityReport, MAX_PROBE_DEGREE};

use crate::femspaces::{
    basis_degree, eval_basis, num_local, prolongation, triangle_rule, Layer, MeshLayers, PiecewiseField,
    PointField, SparseMatrix,
};
use crate::meshkit::SimplexClass;
use crate::weights::{WeightMode, WeightSet};
use crate::{Error, Point, Result};

/// Field to be projected: a base-layer Whitney field or a pointwise
/// callback with a declared polynomial degree.
#[derive(Clone, Debug)]
pub enum InputField {
    Discrete(PiecewiseField),
    Callback(PointField),
}

impl InputField {
    pub fn form_degree(&self) -> usize {
        match self {
            InputField::Discrete(f) => f.form_degree,
            InputField::Callback(f) => f.form_degree,
        }
    }
}

enum Prepared<'u> {
    /// Dense split-layer coefficients of a discrete input.
    Fine(Vec<f64>),
    Point(&'u PointField),
}

/// `Π^l` for one form degree, bound to a weight set.
pub struct ProjectionOperator<'a> {
    pub layers: &'a MeshLayers,
    pub weights: &'a WeightSet,
    pub form_degree: usize,
    /// Base-to-split change of basis for discrete inputs.
    prolong: SparseMatrix,
    /// `∫_c W^{3-l}_i · W^l_j` on every split cell.
    cross: Vec<[[f64; 6]; 6]>,
}

impl<'a> ProjectionOperator<'a> {
    pub fn new(layers: &'a MeshLayers, weights: &'a WeightSet, form_degree: usize) -> Result<Self> {
        if form_degree > 3 {
            return Err(Error::DegreeMismatch {
                expected: 3,
                found: form_degree,
            });
        }
        let l = form_degree;
        let k = 3 - l;
        let fine = &layers.alfeld.complex;
        let cross = (0..fine.num_cells())
            .map(|c| {
                let g = &layers.alfeld_geometry[c];
                let mut m = [[0.0; 6]; 6];
                for (p, w) in layers.rule.unit_weights() {
                    let a = eval_basis(k, g, p);
                    let b = eval_basis(l, g, p);
                    for i in 0..num_local(k) {
                        for j in 0..num_local(l) {
                            m[i][j] += w * g.volume * a[i].dot(&b[j]);
                        }
                    }
                }
                m
            })
            .collect();
        Ok(ProjectionOperator {
            layers,
            weights,
            form_degree,
            prolong: prolongation(&layers.base, &layers.alfeld, l),
            cross,
        })
    }

    pub fn is_omitted(&self, id: usize) -> bool {
        matches!(self.weights.mode, WeightMode::Gamma { .. })
            && self.weights.weight(self.form_degree, id).class == SimplexClass::Boundary
    }

    /// `⟨Z(σ), u⟩` over the extended star of σ, on the split layer.
    pub fn pairing(&self, id: usize, u: &InputField) -> Result<f64> {
        self.check_input(u)?;
        self.pairing_prepared(id, &self.prepare(u)?)
    }

    fn prepare<'u>(&self, u: &'u InputField) -> Result<Prepared<'u>> {
        Ok(match u {
            InputField::Discrete(f) => Prepared::Fine(self.restrict(f)),
            InputField::Callback(f) => {
                self.layers.rule.require(basis_degree(3 - self.form_degree) + f.degree)?;
                Prepared::Point(f)
            }
        })
    }

    fn pairing_prepared(&self, id: usize, u: &Prepared) -> Result<f64> {
        let l = self.form_degree;
        let w = self.weights.weight(l, id);
        let z = &w.field;
        if z.dofs.is_empty() {
            return Ok(0.0);
        }
        let layers = self.layers;
        let fine = &layers.alfeld.complex;
        let k = 3 - l;
        let mut sum = 0.0;
        for &t in &w.patch_cells {
            for c in layers.alfeld.children(t) {
                match u {
                    Prepared::Fine(fine_u) => {
                        let zs = fine.cell_subsimplices(k, c);
                        let us = fine.cell_subsimplices(l, c);
                        let m = &self.cross[c];
                        for i in 0..num_local(k) {
                            let zi = z.coeff(zs[i]);
                            if zi == 0.0 {
                                continue;
                            }
                            for j in 0..num_local(l) {
                                sum += zi * m[i][j] * fine_u[us[j]];
                            }
                        }
                    }
                    Prepared::Point(f) => {
                        let g = &layers.alfeld_geometry[c];
                        for (p, wq) in layers.rule.unit_weights() {
                            sum += wq * g.volume * z.eval_with(fine, c, g, p).dot(&f.eval(&g.point(p)));
                        }
                    }
                }
            }
        }
        Ok(sum)
    }

    /// Split-layer coefficients of a base field (dense over split simplices).
    fn restrict(&self, f: &PiecewiseField) -> Vec<f64> {
        let coarse = f.to_dense(self.layers.base.count(self.form_degree));
        self.prolong.mul_vec(&coarse)
    }

    fn check_input(&self, u: &InputField) -> Result<()> {
        if u.form_degree() != self.form_degree {
            return Err(Error::DegreeMismatch {
                expected: self.form_degree,
                found: u.form_degree(),
            });
        }
        if let InputField::Discrete(f) = u {
            if f.layer != Layer::Base {
                return Err(Error::LayerMismatch("discrete inputs live on the base layer".into()));
            }
        }
        Ok(())
    }

    /// Sparse rows `σ ↦ [(σ', ⟨Z(σ), W_σ'⟩)]` against the base Whitney basis.
    pub fn matrix(&self) -> SparseMatrix {
        let l = self.form_degree;
        let base = &self.layers.base;
        let n = base.count(l);
        let fine = &self.layers.alfeld.complex;
        let k = 3 - l;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|id| {
                let w = self.weights.weight(l, id);
                let mut acc: Vec<(usize, f64)> = Vec::new();
                if w.field.dofs.is_empty() || self.is_omitted(id) {
                    return acc;
                }
                for &t in &w.patch_cells {
                    for c in self.layers.alfeld.children(t) {
                        let zs = fine.cell_subsimplices(k, c);
                        let us = fine.cell_subsimplices(l, c);
                        for i in 0..num_local(k) {
                            let zi = w.field.coeff(zs[i]);
                            if zi == 0.0 {
                                continue;
                            }
                            for j in 0..num_local(l) {
                                let v = zi * self.cross[c][i][j];
                                for &(s, p) in &self.prolong.rows[us[j]] {
                                    acc.push((s, v * p));
                                }
                            }
                        }
                    }
                }
                let f = PiecewiseField::from_pairs(Layer::Base, l, acc);
                f.dofs.into_iter().zip(f.coeffs).collect()
            })
            .collect();
        SparseMatrix {
            nrows: n,
            ncols: n,
            rows,
        }
    }
}

/// `Π^l u`: the base field with coefficients `⟨Z(σ), u⟩`. In boundary mode
/// the coefficients of simplices inside the constrained part are zero.
pub fn project(op: &ProjectionOperator, u: &InputField) -> Result<PiecewiseField> {
    op.check_input(u)?;
    let l = op.form_degree;
    let prepared = op.prepare(u)?;
    let coeffs = (0..op.layers.base.count(l))
        .into_par_iter()
        .map(|id| if op.is_omitted(id) { Ok(0.0) } else { op.pairing_prepared(id, &prepared) })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PiecewiseField::dense(Layer::Base, l, coeffs))
}

/// Projection built from weights dual to the constrained spaces.
pub fn project_gamma(op: &ProjectionOperator, u: &InputField) -> Result<PiecewiseField> {
    if !matches!(op.weights.mode, WeightMode::Gamma { .. }) {
        return Err(Error::LayerMismatch("project_gamma needs a boundary-mode weight set".into()));
    }
    project(op, u)
}

/// Projection of degree `p`: the lowest-order part plus a correction that
/// raises the polynomial degree. Only `p = 0`, where the correction
/// vanishes, is available.
pub fn project_high_order(op: &ProjectionOperator, u: &InputField, p: usize) -> Result<PiecewiseField> {
    let lowest = project(op, u)?;
    if p == 0 {
        return Ok(lowest);
    }
    Err(Error::NotSupported(format!("degree-raising correction for polynomial degree {p}")))
}

/// Coefficients of `d u` for a base field `u`.
pub fn derivative(layers: &MeshLayers, u: &PiecewiseField) -> PiecewiseField {
    let l = u.form_degree;
    let d = layers.base_incidence.of_degree(l);
    let coeffs = d
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, s)| s as f64 * u.coeff(j)).sum())
        .collect();
    PiecewiseField::dense(Layer::Base, l + 1, coeffs)
}

/// `‖d(Π^l u) − Π^{l+1}(d u)‖ / max(1, ‖Π^{l+1}(d u)‖)` in the maximum
/// norm of coefficients. `du` must be the derivative of `u`.
pub fn commutation_residual(
    lower: &ProjectionOperator,
    upper: &ProjectionOperator,
    u: &InputField,
    du: &InputField,
) -> Result<f64> {
    if upper.form_degree != lower.form_degree + 1 {
        return Err(Error::DegreeMismatch {
            expected: lower.form_degree + 1,
            found: upper.form_degree,
        });
    }
    let pu = project(lower, u)?;
    let dpu = derivative(lower.layers, &pu);
    let pdu = project(upper, du)?;
    let diff = dpu
        .coeffs
        .iter()
        .zip(&pdu.coeffs)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(diff / pdu.max_abs().max(1.0))
}

/// Largest trace of a base field on the listed boundary faces, sampled at
/// triangle quadrature points: values (l=0), tangential parts (l=1) or
/// normal components (l=2). Cell fields have no trace.
pub fn max_trace_on_faces(layers: &MeshLayers, u: &PiecewiseField, faces: &[usize]) -> f64 {
    let l = u.form_degree;
    if l == 3 {
        return 0.0;
    }
    let base = &layers.base;
    let rule = triangle_rule();
    let mut worst: f64 = 0.0;
    for &f in faces {
        let c = base.face_cells(f)[0];
        let g = &layers.base_geometry[c];
        let v = base.simplex_vertices(2, f);
        let x: Vec<Point> = v.iter().map(|&i| base.vertex(i)).collect();
        let n = (x[1] - x[0]).cross(&(x[2] - x[0])).normalize();
        for p in &rule.points {
            let y = x[0] * p[0] + x[1] * p[1] + x[2] * p[2];
            let val = u.eval_with(base, c, g, &g.barycentric(&y));
            let t = match l {
                0 => val.x.abs(),
                1 => val.cross(&n).norm(),
                _ => val.dot(&n).abs(),
            };
            worst = worst.max(t);
        }
    }
    worst
}

