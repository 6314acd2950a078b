use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::dense::{null_space, right_divide_by_upper, Cholesky};
use super::exact::exact_nullity;
use crate::femspaces::{Layer, MeshLayers, PatchSpace};
use crate::{Error, Result};

/// M-orthonormal basis of the kernel of the exterior derivative on a
/// patch space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelBasis {
    pub form_degree: usize,
    pub layer: Layer,
    /// `dim(space) x dim(kernel)`; the first `exact_dim` columns span the
    /// range of the previous derivative (or the constants).
    pub columns: na::DMatrix<f64>,
    pub exact_dim: usize,
    /// Kernel directions outside that range. Zero on contractible patches
    /// with connected constrained surfaces.
    pub harmonic_dim: usize,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// `M-projection` of coefficients onto the kernel complement.
    pub fn project_out(&self, mass: &na::DMatrix<f64>, x: &na::DVector<f64>) -> na::DVector<f64> {
        x - &self.columns * (self.columns.transpose() * (mass * x))
    }

    /// The harmonic columns.
    pub fn harmonic(&self) -> na::DMatrix<f64> {
        self.columns.columns(self.exact_dim, self.harmonic_dim).into_owned()
    }
}

/// Union-find with path halving.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Columns of the previous space whose images form a basis of the range of
/// its derivative: all free vertices but one root (degree 0), or the
/// cotree edges of a spanning tree in which the constrained vertices are
/// merged into one root (degree 1).
fn range_generators(layers: &MeshLayers, previous: &PatchSpace) -> Result<Vec<usize>> {
    let complex = layers.complex(previous.layer());
    let grounded = !previous.constrained_faces.is_empty();
    match previous.form_degree() {
        0 => Ok((0..previous.dim()).skip(if grounded { 0 } else { 1 }).collect()),
        1 => {
            let n = complex.num_vertices();
            let mut dsu = Dsu::new(n + 1);
            let on_boundary = complex.face_closure(&previous.constrained_faces, 0);
            for (v, &b) in on_boundary.iter().enumerate() {
                if b {
                    dsu.union(v, n);
                }
            }
            let mut cotree = Vec::new();
            for (k, &e) in previous.dofs.iter().enumerate() {
                let [a, b] = complex.edges()[e];
                if !dsu.union(a, b) {
                    cotree.push(k);
                }
            }
            Ok(cotree)
        }
        d => Err(Error::NotSupported(format!("range generators of form degree {d}"))),
    }
}

/// M-orthonormalizes the columns of `x` by Cholesky of the Gram matrix.
fn orthonormalize(x: &na::DMatrix<f64>, mass: &na::DMatrix<f64>, context: &str) -> Result<na::DMatrix<f64>> {
    if x.ncols() == 0 {
        return Ok(x.clone());
    }
    let gram = x.transpose() * mass * x;
    let chol = Cholesky::new(&gram).map_err(|_| Error::ExactnessViolation {
        context: format!("{context}: dependent kernel generators"),
        expected: x.ncols(),
        found: x.ncols().saturating_sub(1),
    })?;
    Ok(right_divide_by_upper(x, &chol))
}

/// Generators of the range of the previous derivative (or the constants).
fn exact_part(layers: &MeshLayers, space: &PatchSpace, previous: Option<&PatchSpace>) -> Result<na::DMatrix<f64>> {
    let l = space.form_degree();
    if l == 0 {
        return Ok(if space.constrained_faces.is_empty() && space.dim() > 0 {
            let one = space.constant_vector(layers);
            na::DMatrix::from_column_slice(one.len(), 1, one.as_slice())
        } else {
            na::DMatrix::zeros(space.dim(), 0)
        });
    }
    let prev = previous.ok_or_else(|| Error::NotSupported(format!("kernel of form degree {l} needs the previous space")))?;
    if prev.form_degree() + 1 != l || prev.layer() != space.layer() {
        return Err(Error::DegreeMismatch {
            expected: l,
            found: prev.form_degree() + 1,
        });
    }
    if prev.next_dofs != space.dofs {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: prev.next_dofs.len(),
        });
    }
    let cols = range_generators(layers, prev)?;
    let mut x = na::DMatrix::zeros(space.dim(), cols.len());
    let transposed = prev.diff.transpose();
    for (k, &c) in cols.iter().enumerate() {
        for &(r, v) in &transposed.rows[c] {
            x[(r, k)] = v as f64;
        }
    }
    Ok(x)
}

/// Kernel of the derivative on `space`, spanned by the image of the
/// previous space. Fails with `ExactnessViolation` when the exact null
/// space dimension differs, i.e. when the local sequence is not exact.
pub fn kernel_basis(layers: &MeshLayers, space: &PatchSpace, previous: Option<&PatchSpace>) -> Result<KernelBasis> {
    let k = kernel_with_cohomology(layers, space, previous)?;
    if k.harmonic_dim > 0 {
        return Err(Error::ExactnessViolation {
            context: format!("kernel of form degree {} on {:?} layer", space.form_degree(), space.layer()),
            expected: k.exact_dim + k.harmonic_dim,
            found: k.exact_dim,
        });
    }
    Ok(k)
}

/// Kernel of the derivative on `space`, including directions not reached
/// by the previous derivative. These appear when a constrained boundary
/// part of the patch is disconnected.
pub fn kernel_with_cohomology(
    layers: &MeshLayers,
    space: &PatchSpace,
    previous: Option<&PatchSpace>,
) -> Result<KernelBasis> {
    let l = space.form_degree();
    if l == 3 {
        return Err(Error::NotSupported("kernel of the top-degree derivative".into()));
    }
    let context = format!("kernel of form degree {l} on {:?} layer", space.layer());
    let x = exact_part(layers, space, previous)?;
    let nullity = exact_nullity(&space.diff);
    if x.ncols() > nullity {
        return Err(Error::ExactnessViolation {
            context,
            expected: nullity,
            found: x.ncols(),
        });
    }
    let exact = orthonormalize(&x, &space.mass, &context)?;
    let harmonic_dim = nullity - x.ncols();
    let columns = if harmonic_dim == 0 {
        exact
    } else {
        // kernel vectors M-orthogonal to the exact part
        let b = space.diff_dense();
        let mx = exact.transpose() * &space.mass;
        let scale_b = b.norm().max(1.0);
        let scale_m = mx.norm().max(f64::MIN_POSITIVE);
        let nb = b.nrows();
        let mut stacked = na::DMatrix::zeros(nb + mx.nrows(), space.dim());
        stacked.rows_mut(0, nb).copy_from(&(b / scale_b));
        stacked.rows_mut(nb, mx.nrows()).copy_from(&(mx / scale_m));
        let (h, sv) = null_space(&stacked, harmonic_dim)?;
        let worst = sv.iter().fold(0.0f64, |m, &s| m.max(s));
        if worst > 1e-8 {
            return Err(Error::NumericalBreakdown {
                context,
                detail: format!("harmonic directions not resolved (singular value {worst:.3e})"),
            });
        }
        let h = orthonormalize(&h, &space.mass, &context)?;
        let mut all = na::DMatrix::zeros(space.dim(), exact.ncols() + h.ncols());
        all.columns_mut(0, exact.ncols()).copy_from(&exact);
        all.columns_mut(exact.ncols(), h.ncols()).copy_from(&h);
        all
    };
    Ok(KernelBasis {
        form_degree: l,
        layer: space.layer(),
        exact_dim: x.ncols(),
        harmonic_dim,
        columns,
    })
}
