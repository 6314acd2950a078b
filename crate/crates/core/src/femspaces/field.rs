use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::whitney::{eval_basis, num_local, CellGeometry};
use super::Layer;
use crate::meshkit::{OrientedSimplex, SimplicialComplex};
use crate::{Error, Point, Result};

/// Lowest-order field given by Whitney coefficients on a subset of the
/// `form_degree`-simplices of one mesh layer. Missing ids are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseField {
    pub layer: Layer,
    pub form_degree: usize,
    /// Sorted global simplex ids.
    pub dofs: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl PiecewiseField {
    /// Field with one coefficient per simplex of the layer.
    pub fn dense(layer: Layer, form_degree: usize, coeffs: Vec<f64>) -> PiecewiseField {
        PiecewiseField {
            layer,
            form_degree,
            dofs: (0..coeffs.len()).collect(),
            coeffs,
        }
    }

    pub fn zeros(layer: Layer, complex: &SimplicialComplex, form_degree: usize) -> PiecewiseField {
        Self::dense(layer, form_degree, vec![0.0; complex.count(form_degree)])
    }

    /// Builds a field from `(id, value)` pairs in any order; repeated ids add up.
    pub fn from_pairs(layer: Layer, form_degree: usize, mut pairs: Vec<(usize, f64)>) -> PiecewiseField {
        pairs.sort_by_key(|p| p.0);
        let mut dofs: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut coeffs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (id, v) in pairs {
            if dofs.last() == Some(&id) {
                *coeffs.last_mut().unwrap() += v;
            } else {
                dofs.push(id);
                coeffs.push(v);
            }
        }
        PiecewiseField {
            layer,
            form_degree,
            dofs,
            coeffs,
        }
    }

    pub fn coeff(&self, id: usize) -> f64 {
        self.dofs.binary_search(&id).map_or(0.0, |k| self.coeffs[k])
    }

    /// Dense coefficient vector of length `n`.
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&d, &c) in self.dofs.iter().zip(&self.coeffs) {
            out[d] = c;
        }
        out
    }

    /// Value (scalar forms in the first component) at barycentric point
    /// `lam` of cell `c`.
    pub fn eval(&self, complex: &SimplicialComplex, c: usize, lam: &[f64; 4]) -> Point {
        let g = CellGeometry::of_cell(complex, c);
        self.eval_with(complex, c, &g, lam)
    }

    pub fn eval_with(&self, complex: &SimplicialComplex, c: usize, g: &CellGeometry, lam: &[f64; 4]) -> Point {
        let l = self.form_degree;
        let basis = eval_basis(l, g, lam);
        let subs = complex.cell_subsimplices(l, c);
        let mut v = Point::zeros();
        for k in 0..num_local(l) {
            let a = self.coeff(subs[k]);
            if a != 0.0 {
                v += basis[k] * a;
            }
        }
        v
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Whitney form of `sigma`: the global field with coefficient one on
/// `sigma` and zero elsewhere.
pub fn whitney(complex: &SimplicialComplex, sigma: &OrientedSimplex) -> Result<PiecewiseField> {
    let id = complex
        .find(sigma)
        .ok_or_else(|| Error::UnknownSimplex(sigma.vertices().to_vec()))?;
    let mut coeffs = vec![0.0; complex.count(sigma.dim())];
    coeffs[id] = 1.0;
    Ok(PiecewiseField::dense(Layer::Base, sigma.dim(), coeffs))
}

/// Field given pointwise, with the polynomial degree used to choose
/// quadrature. Scalar forms use the first component.
#[derive(Clone)]
pub struct PointField {
    pub form_degree: usize,
    pub degree: usize,
    f: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
}

impl std::fmt::Debug for PointField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointField")
            .field("form_degree", &self.form_degree)
            .field("degree", &self.degree)
            .finish()
    }
}

impl PointField {
    pub fn new(form_degree: usize, degree: usize, f: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        PointField {
            form_degree,
            degree,
            f: Arc::new(f),
        }
    }

    pub fn scalar(form_degree: usize, degree: usize, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(form_degree, degree, move |x| Point::new(f(x), 0.0, 0.0))
    }

    pub fn eval(&self, x: &Point) -> Point {
        (self.f)(x)
    }
}
