//! Lowest-order Whitney spaces on patches of either mesh layer.

mod bubble;
mod dofs;
mod field;
mod quadrature;
mod space;
mod sparse;
mod whitney;

pub use bubble::{inner_product, mu_bubble};
pub use dofs::{canonical_dof, canonical_dof_field, dof_of_fn, prolongation};
pub use field::{whitney, PiecewiseField, PointField};
pub use quadrature::{line_rule, tet_rule, triangle_rule, LineRule, QuadratureRule, TetRule, TriangleRule};
pub use space::{
    assemble_on_cells, assemble_space, pair_matrix, weighted_stiffness, Bc, Layer, MeshLayers, PatchSpace,
    SpaceSpec,
};
pub use sparse::SparseMatrix;
pub use whitney::{basis_degree, components, eval_basis, eval_derivative, num_local, CellGeometry};
