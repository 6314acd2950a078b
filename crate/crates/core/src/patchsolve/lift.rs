use nalgebra as na;

use super::dense::{null_space, numerical_rank, Cholesky};
use super::{KernelBasis, SolveReport};
use crate::femspaces::PatchSpace;
use crate::{Error, Result};

/// Relative residual accepted for the constraint `B x = t`.
pub const LIFT_TOL: f64 = 1e-9;

/// Minimum M-norm solution of `B x = target`, where `B` is the derivative
/// of `space` and `target` holds coefficients in its next space. The
/// result is M-orthogonal to the kernel of `B`.
pub fn min_norm_lift(
    space: &PatchSpace,
    kernel: &KernelBasis,
    target: &na::DVector<f64>,
) -> Result<(na::DVector<f64>, SolveReport)> {
    lift_impl(space, kernel, target, None)
}

/// Like [`min_norm_lift`], with the extra conditions `pairingᵀ x = values`
/// (one column of `pairing` per condition). The result is M-orthogonal to
/// the part of the kernel left free by these conditions.
pub fn min_norm_lift_with_conditions(
    space: &PatchSpace,
    kernel: &KernelBasis,
    target: &na::DVector<f64>,
    pairing: &na::DMatrix<f64>,
    values: &na::DVector<f64>,
) -> Result<(na::DVector<f64>, SolveReport)> {
    lift_impl(space, kernel, target, Some((pairing, values)))
}

fn lift_impl(
    space: &PatchSpace,
    kernel: &KernelBasis,
    target: &na::DVector<f64>,
    extra: Option<(&na::DMatrix<f64>, &na::DVector<f64>)>,
) -> Result<(na::DVector<f64>, SolveReport)> {
    let n = space.dim();
    let b = space.diff_dense();
    if target.len() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows(),
            found: target.len(),
        });
    }
    let mut report = SolveReport {
        kernel_dim: kernel.dim(),
        harmonic_dim: kernel.harmonic_dim,
        ..Default::default()
    };
    let extra_zero = extra.map_or(true, |(_, r)| r.iter().all(|&v| v == 0.0));
    if target.iter().all(|&v| v == 0.0) && extra_zero {
        return Ok((na::DVector::zeros(n), report));
    }

    // stacked constraint rows, each block scaled to unit Frobenius norm
    let sb = b.norm().max(f64::MIN_POSITIVE);
    let mut rows = b.clone() / sb;
    let mut rhs = target.clone() / sb;
    let mut free = kernel.columns.clone();
    if let Some((p, r)) = extra {
        if p.nrows() != n || p.ncols() != r.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.nrows(),
            });
        }
        let sp = p.norm().max(f64::MIN_POSITIVE);
        rows = stack_rows(&rows, &(p.transpose() / sp));
        rhs = stack_vec(&rhs, &(r / sp));
        // kernel directions not fixed by the extra conditions
        let pk = p.transpose() * &kernel.columns;
        let rank = if pk.ncols() == 0 { 0 } else { numerical_rank(&pk, 1e-10)? };
        if rank > 0 {
            let (nb, _) = null_space(&pk, kernel.dim() - rank)?;
            free = &kernel.columns * nb;
        }
        report
            .decisions
            .push(format!("{} extra conditions fix {rank} kernel directions", p.ncols()));
    }

    let ata = rows.transpose() * &rows;
    let mk = &space.mass * &free;
    let penalty = &mk * mk.transpose();
    let s = if penalty.trace() > 0.0 { ata.trace() / penalty.trace() } else { 1.0 };
    let system = ata + penalty * s;
    let chol = Cholesky::new(&system).map_err(|e| Error::NumericalBreakdown {
        context: "min_norm_lift".into(),
        detail: format!("regularized normal system not definite: {e}"),
    })?;
    let x = chol.solve(&(rows.transpose() * &rhs));

    let res = (&b * &x - target).norm();
    let scale = target.norm().max(b.norm() * x.norm() * f64::EPSILON);
    report.residual = res / scale.max(f64::MIN_POSITIVE);
    let mut bad = report.residual > LIFT_TOL;
    if let Some((p, r)) = extra {
        let cres = (p.transpose() * &x - r).norm();
        let cscale = r.norm().max(p.norm() * x.norm() * 1e-6).max(f64::MIN_POSITIVE);
        report.decisions.push(format!("extra condition residual {:.3e}", cres / cscale));
        bad |= cres / cscale > LIFT_TOL;
    }
    if bad {
        return Err(Error::InconsistentTarget {
            residual: report.residual,
        });
    }
    let xm = (x.transpose() * &space.mass * &x)[0].sqrt();
    if xm > 0.0 {
        report.constraint_violation = (free.transpose() * (&space.mass * &x)).norm() / xm;
    }
    Ok((x, report))
}

fn stack_rows(a: &na::DMatrix<f64>, b: &na::DMatrix<f64>) -> na::DMatrix<f64> {
    let mut out = na::DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

fn stack_vec(a: &na::DVector<f64>, b: &na::DVector<f64>) -> na::DVector<f64> {
    na::DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}
