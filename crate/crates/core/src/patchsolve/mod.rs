//! Constrained local solvers on patch spaces: kernels, minimum-norm lifts
//! through the exterior derivative and bubble-weighted singular solves.

pub mod dense;
mod exact;
mod kernel;
mod lift;
mod report;
mod weighted;

pub use dense::{lu_solve, numerical_rank, sym_eig, Cholesky};
pub use exact::{exact_nullity, exact_rank};
pub use kernel::{kernel_basis, kernel_with_cohomology, KernelBasis};
pub use lift::{min_norm_lift, min_norm_lift_with_conditions, LIFT_TOL};
pub use report::SolveReport;
pub use weighted::{bordered_solve, weighted_complement_solve, KERNEL_TOL, WEIGHTED_TOL};
