//! Discrete Poincaré constants on patches and Piola transformations.

mod piola;

use nalgebra as na;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use piola::{
    piola, piola_commutation_residual, piola_inverse, piola_weighted_identity_check, rho, AffineCellMap, AffineField,
};

use crate::femspaces::{assemble_space, Bc, Layer, MeshLayers, PatchSpace, SpaceSpec};
use crate::meshkit::{diameter, extended_star, Patch, PatchKind};
use crate::patchsolve::dense::{generalized_eig, null_space};
use crate::patchsolve::{kernel_basis, KernelBasis};
use crate::{Error, Result};

/// Smallest admissible eigenvalue relative to the largest one.
pub const LAMBDA_REL_TOL: f64 = 1e-10;

/// Local sequence on an extended star.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sequence {
    /// Base-layer spaces without boundary conditions.
    Plain,
    /// Split-layer spaces with zero traces on the patch boundary.
    Mathring,
}

impl Sequence {
    pub fn spec(self, l: usize) -> SpaceSpec {
        match self {
            Sequence::Plain => SpaceSpec::new(l, Layer::Base, Bc::None),
            Sequence::Mathring => SpaceSpec::new(l, Layer::Alfeld, Bc::FullBoundary),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sequence::Plain => "plain",
            Sequence::Mathring => "mathring",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareResult {
    /// Seed simplex `(dim, id)`; `None` for standalone patches.
    pub sigma: Option<(usize, usize)>,
    pub sequence: Sequence,
    pub form_degree: usize,
    pub h: f64,
    /// `h` is the patch diameter because the patch has no seed simplex.
    pub h_is_patch_diameter: bool,
    pub lambda_min: f64,
    /// `1 / (h sqrt(λ_min))`.
    pub constant: f64,
    /// Diameter of the patch.
    pub h_patch: f64,
    /// `1 / (h_patch sqrt(λ_min))`, the patch-diameter normalization.
    pub constant_patch: f64,
    /// `‖A x − λ M x‖ / max(‖A x‖, λ ‖M x‖)` for the computed eigenpair.
    pub residual: f64,
    pub space_dim: usize,
    pub kernel_dim: usize,
}

/// Smallest eigenvalue of `(Bᵀ M_next B, M)` on the M-orthogonal complement
/// of `kernel`, and the resulting constant `1 / (h sqrt(λ_min))`.
pub fn poincare_constant(
    space: &PatchSpace,
    next_space: &PatchSpace,
    kernel: &KernelBasis,
    h: f64,
) -> Result<PoincareResult> {
    if next_space.dofs != space.next_dofs {
        return Err(Error::LayerMismatch("next space does not match the derivative range".into()));
    }
    let n = space.dim();
    let k = kernel.dim();
    let sequence = match space.spec.layer {
        Layer::Base => Sequence::Plain,
        Layer::Alfeld => Sequence::Mathring,
    };
    let context = || format!("Poincaré pencil of form degree {} on the {:?} layer", space.form_degree(), space.layer());
    if k >= n {
        return Err(Error::ExactnessViolation {
            context: context(),
            expected: n.saturating_sub(1),
            found: k,
        });
    }
    let b = space.diff_dense();
    let a = b.transpose() * &next_space.mass * &b;
    let m = &space.mass;

    // Euclidean-orthonormal basis of {x : Kᵀ M x = 0}
    let q = if k == 0 {
        na::DMatrix::identity(n, n)
    } else {
        let c = kernel.columns.transpose() * m;
        null_space(&c, n - k)?.0
    };
    let aq = q.transpose() * &a * &q;
    let mq = q.transpose() * m * &q;
    let (values, vectors) = generalized_eig(&aq, &mq)?;
    let lambda = values[0];
    let top = values[values.len() - 1];
    if !(lambda > LAMBDA_REL_TOL * top) {
        return Err(Error::ExactnessViolation {
            context: context(),
            expected: k,
            found: k + values.iter().filter(|&&v| v <= LAMBDA_REL_TOL * top).count(),
        });
    }
    let x = &q * vectors.column(0);
    let ax = &a * &x;
    let mx = m * &x;
    let residual = (&ax - lambda * &mx).norm() / ax.norm().max(lambda * mx.norm());
    Ok(PoincareResult {
        sigma: None,
        sequence,
        form_degree: space.form_degree(),
        h,
        h_is_patch_diameter: false,
        lambda_min: lambda,
        constant: 1.0 / (h * lambda.sqrt()),
        h_patch: h,
        constant_patch: 1.0 / (h * lambda.sqrt()),
        residual,
        space_dim: n,
        kernel_dim: k,
    })
}

/// Poincaré constant of form degree `l` (0, 1 or 2) on `patch`.
pub fn patch_poincare(layers: &MeshLayers, patch: &Patch, sequence: Sequence, l: usize) -> Result<PoincareResult> {
    if l > 2 {
        return Err(Error::DegreeMismatch { expected: 2, found: l });
    }
    let space = assemble_space(layers, patch, sequence.spec(l), None)?;
    let next = assemble_space(layers, patch, sequence.spec(l + 1), None)?;
    let prev = if l > 0 {
        Some(assemble_space(layers, patch, sequence.spec(l - 1), None)?)
    } else {
        None
    };
    let kernel = kernel_basis(layers, &space, prev.as_ref())?;
    let mut out = poincare_constant(&space, &next, &kernel, patch.h)?;
    let mut ids: Vec<usize> = patch.cells.iter().flat_map(|&c| layers.base.cells()[c]).collect();
    ids.sort_unstable();
    ids.dedup();
    let pts: Vec<_> = ids.iter().map(|&v| layers.base.vertex(v)).collect();
    out.h_patch = diameter(&pts);
    out.constant_patch = 1.0 / (out.h_patch * out.lambda_min.sqrt());
    if patch.kind == PatchKind::Custom {
        out.h_is_patch_diameter = true;
    } else {
        out.sigma = Some((patch.seed.dim(), layers.base.find(&patch.seed).expect("seed in mesh")));
    }
    Ok(out)
}

/// Constants on the extended stars of every simplex, for both sequences
/// and form degrees 0 to 2. Rows are ordered by (dim, id, sequence, l).
pub fn poincare_sweep(layers: &MeshLayers) -> Result<Vec<PoincareResult>> {
    let base = &layers.base;
    let mut jobs = Vec::new();
    for dim in 0..4 {
        for id in 0..base.count(dim) {
            for seq in [Sequence::Plain, Sequence::Mathring] {
                for l in 0..3 {
                    jobs.push((dim, id, seq, l));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(dim, id, seq, l)| {
            let patch = extended_star(base, &base.simplex(dim, id))?;
            patch_poincare(layers, &patch, seq, l)
        })
        .collect()
}

/// Largest constant per `(sequence, l)` over a sweep.
pub fn max_constants(results: &[PoincareResult]) -> Vec<(Sequence, usize, f64)> {
    let mut out = Vec::new();
    for seq in [Sequence::Plain, Sequence::Mathring] {
        for l in 0..3 {
            let worst = results
                .iter()
                .filter(|r| r.sequence == seq && r.form_degree == l)
                .fold(0.0f64, |m, r| m.max(r.constant));
            out.push((seq, l, worst));
        }
    }
    out
}
