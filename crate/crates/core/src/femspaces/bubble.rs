use super::field::PiecewiseField;
use super::space::{Layer, MeshLayers};
use super::whitney::{basis_degree, components, CellGeometry};
use crate::{Error, Result};

/// The piecewise affine bubble on the split mesh: one at every base-cell
/// barycenter, zero at the original vertices (hence on every base face).
pub fn mu_bubble(layers: &MeshLayers) -> PiecewiseField {
    let fine = &layers.alfeld.complex;
    let coeffs = (0..fine.num_vertices())
        .map(|v| if layers.alfeld.is_barycenter(v) { 1.0 } else { 0.0 })
        .collect();
    PiecewiseField::dense(Layer::Alfeld, 0, coeffs)
}

/// `∫ weight · u · v` over the whole mesh, integrated on the split layer
/// whenever any argument lives there. Scalar and vector proxies must match.
pub fn inner_product(
    layers: &MeshLayers,
    u: &PiecewiseField,
    v: &PiecewiseField,
    weight: Option<&PiecewiseField>,
) -> Result<f64> {
    if components(u.form_degree) != components(v.form_degree) {
        return Err(Error::DegreeMismatch {
            expected: u.form_degree,
            found: v.form_degree,
        });
    }
    let wdeg = weight.map_or(0, |w| basis_degree(w.form_degree));
    layers
        .rule
        .require(basis_degree(u.form_degree) + basis_degree(v.form_degree) + wdeg)?;
    let fine = [Some(u), Some(v), weight]
        .iter()
        .flatten()
        .any(|f| f.layer == Layer::Alfeld);
    let region = if fine { Layer::Alfeld } else { Layer::Base };
    let complex = layers.complex(region);
    let eval = |f: &PiecewiseField, c: usize, x: &crate::Point| {
        let (cell, g): (usize, &CellGeometry) = if f.layer == region {
            (c, layers.geometry(region, c))
        } else {
            let t = layers.alfeld.parent(c);
            (t, &layers.base_geometry[t])
        };
        f.eval_with(layers.complex(f.layer), cell, g, &g.barycentric(x))
    };
    let mut total = 0.0;
    for c in 0..complex.num_cells() {
        let g = layers.geometry(region, c);
        let mut acc = 0.0;
        for (p, w) in layers.rule.unit_weights() {
            let x = g.point(p);
            let mut val = eval(u, c, &x).dot(&eval(v, c, &x));
            if let Some(wf) = weight {
                val *= eval(wf, c, &x).x;
            }
            acc += w * val;
        }
        total += g.volume * acc;
    }
    Ok(total)
}
