use serde::{Deserialize, Serialize};

use super::{extended_star, face_components, Patch, SimplicialComplex};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimplexClass {
    /// Contained in the constrained boundary part.
    Boundary,
    /// Extended-star boundary carries no constrained face.
    Interior,
    /// Not contained in the constrained part, but its extended-star boundary
    /// carries at least one constrained face.
    Interface,
}

/// Split of a patch boundary into constrained faces and the rest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSurfaces {
    pub gamma: Vec<usize>,
    pub gammac: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GammaOptions {
    /// Fail on patches whose constrained or free surface splits into several
    /// edge-connected pieces. By default they are only listed in `warnings`.
    pub reject_disconnected_traces: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaPartition {
    /// Sorted ids of the constrained boundary faces.
    pub gamma_faces: Vec<usize>,
    pub is_gamma_face: Vec<bool>,
    /// `classes[dim][id]`.
    pub classes: [Vec<SimplexClass>; 4],
    /// Simplices `(dim, id)` whose patch surfaces are not edge-connected.
    pub warnings: Vec<(usize, usize)>,
}

impl GammaPartition {
    pub fn class(&self, dim: usize, id: usize) -> SimplexClass {
        self.classes[dim][id]
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_faces.is_empty()
    }

    /// Constrained and free parts of the boundary of a patch.
    pub fn surfaces(&self, complex: &SimplicialComplex, patch: &Patch) -> PatchSurfaces {
        let mut out = PatchSurfaces::default();
        for &f in &patch.boundary_faces {
            if self.is_gamma_face[f] {
                out.gamma.push(f);
            } else {
                out.gammac.push(f);
            }
        }
        debug_assert!(out.gamma.iter().all(|&f| complex.is_boundary_face(f)));
        out
    }
}

/// Classifies every simplex with respect to the constrained faces `gamma`.
pub fn classify_gamma(
    complex: &SimplicialComplex,
    gamma: &[usize],
    options: GammaOptions,
) -> Result<GammaPartition> {
    let mut gamma_faces = gamma.to_vec();
    gamma_faces.sort_unstable();
    gamma_faces.dedup();
    let mut is_gamma_face = vec![false; complex.num_faces()];
    for &f in &gamma_faces {
        if f >= complex.num_faces() || !complex.is_boundary_face(f) {
            let face = complex.faces().get(f).copied().unwrap_or([f, f, f]);
            return Err(Error::NotABoundaryFace { face });
        }
        is_gamma_face[f] = true;
    }

    let mut classes: [Vec<SimplexClass>; 4] = Default::default();
    let mut warnings = Vec::new();
    for dim in 0..4 {
        let on_gamma = if dim < 3 {
            complex.face_closure(&gamma_faces, dim)
        } else {
            vec![false; complex.num_cells()]
        };
        let mut cls = Vec::with_capacity(complex.count(dim));
        for id in 0..complex.count(dim) {
            if on_gamma[id] {
                cls.push(SimplexClass::Boundary);
                continue;
            }
            if gamma_faces.is_empty() {
                cls.push(SimplexClass::Interior);
                continue;
            }
            let patch = extended_star(complex, &complex.simplex(dim, id))?;
            let (g, gc): (Vec<usize>, Vec<usize>) = patch
                .boundary_faces
                .iter()
                .partition(|&&f| is_gamma_face[f]);
            if dim == 3 && gc.is_empty() {
                return Err(Error::GammaCoversPatchBoundary { cell: id });
            }
            if g.is_empty() {
                cls.push(SimplexClass::Interior);
                continue;
            }
            let connected = face_components(complex, &g).len() <= 1
                && face_components(complex, &gc).len() <= 1;
            if !connected {
                if options.reject_disconnected_traces {
                    return Err(Error::NonConnectedTrace {
                        simplex: complex.simplex_vertices(dim, id).to_vec(),
                    });
                }
                warnings.push((dim, id));
            }
            cls.push(SimplexClass::Interface);
        }
        classes[dim] = cls;
    }
    Ok(GammaPartition {
        gamma_faces,
        is_gamma_face,
        classes,
        warnings,
    })
}
