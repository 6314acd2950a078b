use nalgebra as na;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProjectionOperator;
use crate::femspaces::{components, eval_basis, num_local};
use crate::meshkit::diameter;
use crate::patchsolve::dense::{sym_eigenvalues, Cholesky};
use crate::{Error, Point, Result};

/// Probe mass matrices have degree `2q`; the cell rule is exact up to 5.
pub const MAX_PROBE_DEGREE: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub cell: usize,
    /// Sup of `‖Π u‖_{L²(τ)} / ‖u‖_{L²(es(τ))}` over the probe space.
    pub constant: f64,
    pub probe_degree: usize,
    pub probe_dim: usize,
}

fn exponents(q: usize) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for d in 0..=q as i32 {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

/// Probe functions per cell: scaled monomials of degree ≤ q times each
/// proxy component.
pub fn probe_count(l: usize, q: usize) -> usize {
    components(l) * exponents(q).len()
}

/// Exact sup over discontinuous piecewise polynomials of degree `q` on the
/// extended star of `cell`: the largest generalized singular value of the
/// pairing matrix, measured in the `L²(τ)` norm of the output and the
/// `L²(es(τ))` norm of the probe.
pub fn local_stability_constant(op: &ProjectionOperator, cell: usize, q: usize) -> Result<StabilityReport> {
    if q > MAX_PROBE_DEGREE {
        return Err(Error::QuadratureUnderResolved {
            requested: 2 * q,
            available: op.layers.rule.degree,
        });
    }
    let layers = op.layers;
    let base = &layers.base;
    let fine = &layers.alfeld.complex;
    let l = op.form_degree;
    let k = 3 - l;
    let ncomp = components(l);
    let exps = exponents(q);
    let nm = exps.len();
    let es = &op.weights.weight(3, cell).patch_cells;
    let sigmas: Vec<usize> = base.cell_subsimplices(l, cell)[..num_local(l)].to_vec();
    let ns = sigmas.len();

    // output mass on τ
    let g = &layers.base_geometry[cell];
    let mut m_out = na::DMatrix::zeros(ns, ns);
    for (p, w) in layers.rule.unit_weights() {
        let b = eval_basis(l, g, p);
        for i in 0..ns {
            for j in 0..ns {
                m_out[(i, j)] += w * g.volume * b[i].dot(&b[j]);
            }
        }
    }

    // S = L M_p⁻¹ Lᵀ, accumulated cell by cell (the probe mass is block diagonal)
    let mut s = na::DMatrix::zeros(ns, ns);
    for &t in es {
        let gt = &layers.base_geometry[t];
        let center = gt.x.iter().sum::<Point>() / 4.0;
        let h = diameter(&gt.x);
        let mono = |x: &Point| -> Vec<f64> {
            let y = (x - center) / h;
            exps.iter().map(|e| y.x.powi(e[0]) * y.y.powi(e[1]) * y.z.powi(e[2])).collect()
        };
        let mut mass = na::DMatrix::zeros(nm, nm);
        for (p, w) in layers.rule.unit_weights() {
            let v = mono(&gt.point(p));
            for a in 0..nm {
                for b in 0..nm {
                    mass[(a, b)] += w * gt.volume * v[a] * v[b];
                }
            }
        }
        let chol = Cholesky::new(&mass)?;
        for comp in 0..ncomp {
            let mut lmat = na::DMatrix::zeros(ns, nm);
            for (i, &sigma) in sigmas.iter().enumerate() {
                if op.is_omitted(sigma) {
                    continue;
                }
                let z = &op.weights.weight(l, sigma).field;
                for c in layers.alfeld.children(t) {
                    let gc = &layers.alfeld_geometry[c];
                    let zs = fine.cell_subsimplices(k, c);
                    if zs[..num_local(k)].iter().all(|&d| z.coeff(d) == 0.0) {
                        continue;
                    }
                    for (p, w) in layers.rule.unit_weights() {
                        let zv = z.eval_with(fine, c, gc, p)[comp];
                        if zv == 0.0 {
                            continue;
                        }
                        let v = mono(&gc.point(p));
                        for a in 0..nm {
                            lmat[(i, a)] += w * gc.volume * zv * v[a];
                        }
                    }
                }
            }
            let x = chol.solve_matrix(&lmat.transpose());
            s += &lmat * x;
        }
    }
    let r = Cholesky::new(&m_out)?.l();
    let reduced = r.transpose() * s * r;
    let top = sym_eigenvalues(&reduced)?.last().copied().unwrap_or(0.0);
    Ok(StabilityReport {
        cell,
        constant: top.max(0.0).sqrt(),
        probe_degree: q,
        probe_dim: es.len() * probe_count(l, q),
    })
}

/// Stability constants of every cell.
pub fn stability_constants(op: &ProjectionOperator, q: usize) -> Result<Vec<StabilityReport>> {
    (0..op.layers.base.num_cells())
        .into_par_iter()
        .map(|t| local_stability_constant(op, t, q))
        .collect()
}
