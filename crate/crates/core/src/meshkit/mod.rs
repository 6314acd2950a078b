//! Oriented tetrahedral complexes and the combinatorial structures built on
//! them.

mod alfeld;
mod complex;
mod gamma;
mod generate;
mod incidence;
mod io;
mod patch;
mod simplex;

pub use alfeld::{alfeld_split, AlfeldComplex, AlfeldPatch};
pub use complex::{build_complex, diameter, inscribed_diameter, signed_det, SimplicialComplex};
pub use gamma::{classify_gamma, GammaOptions, GammaPartition, PatchSurfaces, SimplexClass};
pub use generate::{gen_cube_mesh, gen_cube_mesh_reflected, reference_tet, single_tet};
pub use incidence::{incidence, local_incidence, IncidenceMatrices, IntMatrix};
pub use io::{parse_gamma, parse_mesh, write_gamma, write_mesh};
pub use patch::{
    boundary_faces, contractibility_check, extended_star, face_components, star,
    ContractibilityDiagnostic, Patch, PatchKind,
};
pub use simplex::{sorted2, sorted3, OrientedSimplex, LOCAL_EDGES, LOCAL_FACES, TRIANGLE_EDGES};

/// Boundary faces lying in the plane `x[axis] == value` (to 1e-12).
pub fn boundary_faces_on_plane(complex: &SimplicialComplex, axis: usize, value: f64) -> Vec<usize> {
    complex
        .boundary_faces()
        .into_iter()
        .filter(|&f| {
            complex.faces()[f]
                .iter()
                .all(|&v| (complex.vertex(v)[axis] - value).abs() < 1e-12)
        })
        .collect()
}
