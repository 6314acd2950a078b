use serde::{Deserialize, Serialize};

use super::simplex::LOCAL_FACES;
use super::{boundary_faces, build_complex, Patch, SimplicialComplex};
use crate::{Point, Result};

/// Barycentric (Alfeld) refinement of a whole complex.
///
/// The barycenter of base cell `t` gets vertex id `nverts + t`, so every
/// child keeps increasing vertex ids without renumbering the originals.
/// Child `k` of cell `t` has index `4t + k` and is the cone from the
/// barycenter over the base face omitting local vertex `k`.
#[derive(Clone, Debug)]
pub struct AlfeldComplex {
    pub complex: SimplicialComplex,
    pub base_vertices: usize,
    base_edge_map: Vec<usize>,
    base_face_map: Vec<usize>,
}

impl AlfeldComplex {
    pub fn new(base: &SimplicialComplex) -> Result<AlfeldComplex> {
        let nv = base.num_vertices();
        let mut vertices: Vec<Point> = base.vertices().to_vec();
        let mut tets = Vec::with_capacity(4 * base.num_cells());
        for (t, s) in base.cells().iter().enumerate() {
            let x = base.cell_points(t);
            vertices.push((x[0] + x[1] + x[2] + x[3]) / 4.0);
            let b = nv + t;
            for f in LOCAL_FACES {
                tets.push([s[f[0]], s[f[1]], s[f[2]], b]);
            }
        }
        let complex = build_complex(vertices, &tets)?;
        let base_edge_map = base
            .edges()
            .iter()
            .map(|e| complex.edge_id(e[0], e[1]).expect("base edge survives the split"))
            .collect();
        let base_face_map = base
            .faces()
            .iter()
            .map(|f| complex.face_id(*f).expect("base face survives the split"))
            .collect();
        Ok(AlfeldComplex {
            complex,
            base_vertices: nv,
            base_edge_map,
            base_face_map,
        })
    }

    pub fn parent(&self, child: usize) -> usize {
        child / 4
    }

    pub fn children(&self, t: usize) -> [usize; 4] {
        [4 * t, 4 * t + 1, 4 * t + 2, 4 * t + 3]
    }

    pub fn barycenter(&self, t: usize) -> usize {
        self.base_vertices + t
    }

    pub fn is_barycenter(&self, v: usize) -> bool {
        v >= self.base_vertices
    }

    /// Id in the split complex of base simplex `id` of dimension `dim`.
    /// Only vertices, edges and faces survive the split.
    pub fn base_to_alfeld(&self, dim: usize, id: usize) -> usize {
        match dim {
            0 => id,
            1 => self.base_edge_map[id],
            2 => self.base_face_map[id],
            _ => panic!("base cells are not simplices of the split complex"),
        }
    }
}

/// A patch together with its barycentric refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlfeldPatch {
    pub base: Patch,
    /// Sorted child cell indices in the split complex.
    pub split_cells: Vec<usize>,
    /// Barycenter vertex id of each base cell, in base-cell order.
    pub barycenter_ids: Vec<usize>,
    /// Patch boundary faces as ids of the split complex.
    pub boundary_faces: Vec<usize>,
}

impl AlfeldPatch {
    /// Sorted ids of the `dim`-simplices of the split complex in the patch.
    pub fn simplices(&self, alfeld: &AlfeldComplex, dim: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .split_cells
            .iter()
            .flat_map(|&c| alfeld.complex.cell_subsimplices(dim, c).to_vec())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn alfeld_split(alfeld: &AlfeldComplex, patch: &Patch) -> AlfeldPatch {
    let mut split_cells: Vec<usize> = patch.cells.iter().flat_map(|&t| alfeld.children(t)).collect();
    split_cells.sort_unstable();
    let barycenter_ids = patch.cells.iter().map(|&t| alfeld.barycenter(t)).collect();
    let mut bfaces = boundary_faces(&alfeld.complex, &split_cells);
    bfaces.sort_unstable();
    AlfeldPatch {
        base: patch.clone(),
        split_cells,
        barycenter_ids,
        boundary_faces: bfaces,
    }
}
