use nalgebra as na;

use super::dense::lu_solve_unchecked;
use super::{KernelBasis, SolveReport};
use crate::femspaces::{weighted_stiffness, MeshLayers, PatchSpace, PiecewiseField};
use crate::{Error, Result};

/// Bound on `|Kᵀ rhs|` relative to `|K| |rhs|`.
pub const KERNEL_TOL: f64 = 1e-9;
/// Relative residual accepted for the full variational identity.
pub const WEIGHTED_TOL: f64 = 1e-9;

/// Solves `A x = rhs` with `x` M-orthogonal to the kernel `K` of the
/// singular symmetric matrix `A`, through the bordered system
/// `[A, M K; Kᵀ M, 0]`. `rhs` must annihilate the kernel.
pub fn bordered_solve(
    a: &na::DMatrix<f64>,
    mass: &na::DMatrix<f64>,
    kernel: &KernelBasis,
    rhs: &na::DVector<f64>,
) -> Result<(na::DVector<f64>, SolveReport)> {
    let n = a.nrows();
    let k = kernel.dim();
    let mut report = SolveReport {
        kernel_dim: k,
        harmonic_dim: kernel.harmonic_dim,
        ..Default::default()
    };
    if rhs.len() != n || mass.nrows() != n || kernel.columns.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let rn = rhs.norm();
    if rn == 0.0 {
        return Ok((na::DVector::zeros(n), report));
    }
    for j in 0..k {
        let col = kernel.columns.column(j);
        let v = col.dot(rhs).abs() / (col.norm() * rn);
        if v > KERNEL_TOL {
            return Err(Error::KernelResidual { residual: v });
        }
    }

    let mk = mass * &kernel.columns;
    let c = if k > 0 { a.norm() / mk.norm().max(f64::MIN_POSITIVE) } else { 1.0 };
    let mut big = na::DMatrix::zeros(n + k, n + k);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, k)).copy_from(&(&mk * c));
    big.view_mut((n, 0), (k, n)).copy_from(&(mk.transpose() * c));
    let mut full_rhs = na::DVector::zeros(n + k);
    full_rhs.rows_mut(0, n).copy_from(rhs);
    let (sol, _) = lu_solve_unchecked(&big, &full_rhs).map_err(|_| Error::SingularBordered)?;
    let x = sol.rows(0, n).into_owned();
    let lambda = sol.rows(n, k).into_owned();

    report.residual = (a * &x - rhs).norm() / rn;
    report.constraint_violation = (&mk * &lambda).norm() * c / rn;
    if !(report.residual <= WEIGHTED_TOL) {
        return Err(Error::SingularBordered);
    }
    Ok((x, report))
}

/// Solves the bubble-weighted problem `⟨μ d x, d u⟩ = rhs(u)` for all `u` in
/// `space`, with `x` M-orthogonal to the kernel of `d`.
pub fn weighted_complement_solve(
    layers: &MeshLayers,
    space: &PatchSpace,
    mu: &PiecewiseField,
    rhs: &na::DVector<f64>,
    kernel: &KernelBasis,
) -> Result<(PiecewiseField, SolveReport)> {
    let a = weighted_stiffness(layers, space, mu)?;
    let (x, report) = bordered_solve(&a, &space.mass, kernel, rhs)?;
    Ok((space.to_field(&x), report))
}
