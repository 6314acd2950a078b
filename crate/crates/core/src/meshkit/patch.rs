use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{diameter, OrientedSimplex, SimplicialComplex};
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatchKind {
    Star,
    ExtendedStar,
    /// A cell set given directly, without a seed simplex.
    Custom,
}

/// A set of cells of a complex around a seed simplex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Patch {
    pub seed: OrientedSimplex,
    pub kind: PatchKind,
    /// Sorted cell indices of the parent complex.
    pub cells: Vec<usize>,
    /// Faces of the parent complex on the patch boundary.
    pub boundary_faces: Vec<usize>,
    /// Diameter of the seed for edges, faces and cells; diameter of the
    /// vertex star for vertices.
    pub h: f64,
}

impl Patch {
    /// Patch made of an explicit cell set; `h` is the patch diameter.
    pub fn from_cells(complex: &SimplicialComplex, cells: &[usize]) -> Patch {
        let mut cells = cells.to_vec();
        cells.sort_unstable();
        cells.dedup();
        let h = cells_diameter(complex, &cells);
        let seed = OrientedSimplex::new(&complex.cells()[cells[0]]).expect("valid cell");
        Patch {
            seed,
            kind: PatchKind::Custom,
            boundary_faces: boundary_faces(complex, &cells),
            cells,
            h,
        }
    }

    pub fn contains_cell(&self, c: usize) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    /// Sorted ids of the `dim`-simplices that belong to some patch cell.
    pub fn simplices(&self, complex: &SimplicialComplex, dim: usize) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for &c in &self.cells {
            set.extend(complex.cell_subsimplices(dim, c).iter().copied());
        }
        set.into_iter().collect()
    }

    /// Total volume of the patch.
    pub fn volume(&self, complex: &SimplicialComplex) -> f64 {
        self.cells.iter().map(|&c| complex.volume(c)).sum()
    }
}

fn cells_diameter(complex: &SimplicialComplex, cells: &[usize]) -> f64 {
    let mut ids: Vec<usize> = cells.iter().flat_map(|&c| complex.cells()[c]).collect();
    ids.sort_unstable();
    ids.dedup();
    let pts: Vec<Point> = ids.iter().map(|&v| complex.vertex(v)).collect();
    diameter(&pts)
}

/// Faces that belong to exactly one cell of the set.
pub fn boundary_faces(complex: &SimplicialComplex, cells: &[usize]) -> Vec<usize> {
    let mut count: HashMap<usize, usize> = HashMap::new();
    for &c in cells {
        for &f in complex.cell_subsimplices(2, c) {
            *count.entry(f).or_default() += 1;
        }
    }
    let mut out: Vec<usize> = count
        .into_iter()
        .filter(|(_, n)| *n == 1)
        .map(|(f, _)| f)
        .collect();
    out.sort_unstable();
    out
}

fn seed_h(complex: &SimplicialComplex, sigma: &OrientedSimplex) -> f64 {
    if sigma.dim() == 0 {
        cells_diameter(complex, complex.vertex_cells(sigma.vertices()[0]))
    } else {
        let pts: Vec<Point> = sigma.vertices().iter().map(|&v| complex.vertex(v)).collect();
        diameter(&pts)
    }
}

fn check_known(complex: &SimplicialComplex, sigma: &OrientedSimplex) -> Result<()> {
    complex
        .find(sigma)
        .map(|_| ())
        .ok_or_else(|| Error::UnknownSimplex(sigma.vertices().to_vec()))
}

/// Cells containing `sigma`.
pub fn star(complex: &SimplicialComplex, sigma: &OrientedSimplex) -> Result<Patch> {
    check_known(complex, sigma)?;
    let v0 = sigma.vertices()[0];
    let cells: Vec<usize> = complex
        .vertex_cells(v0)
        .iter()
        .copied()
        .filter(|&c| sigma.vertices().iter().all(|v| complex.cells()[c].contains(v)))
        .collect();
    let mut cells = cells;
    cells.sort_unstable();
    Ok(Patch {
        seed: *sigma,
        kind: PatchKind::Star,
        boundary_faces: boundary_faces(complex, &cells),
        cells,
        h: seed_h(complex, sigma),
    })
}

/// Cells sharing at least one vertex with `sigma`.
pub fn extended_star(complex: &SimplicialComplex, sigma: &OrientedSimplex) -> Result<Patch> {
    check_known(complex, sigma)?;
    let mut cells: Vec<usize> = sigma
        .vertices()
        .iter()
        .flat_map(|&v| complex.vertex_cells(v).iter().copied())
        .collect();
    cells.sort_unstable();
    cells.dedup();
    Ok(Patch {
        seed: *sigma,
        kind: PatchKind::ExtendedStar,
        boundary_faces: boundary_faces(complex, &cells),
        cells,
        h: seed_h(complex, sigma),
    })
}

/// Necessary conditions for a patch closure to be contractible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractibilityDiagnostic {
    /// `V - E + F - T` of the closed patch.
    pub euler: i64,
    /// Edge-connected components of the boundary surface.
    pub boundary_components: usize,
    pub pass: bool,
}

pub fn contractibility_check(complex: &SimplicialComplex, patch: &Patch) -> ContractibilityDiagnostic {
    let counts: Vec<i64> = (0..4)
        .map(|d| patch.simplices(complex, d).len() as i64)
        .collect();
    let euler = counts[0] - counts[1] + counts[2] - counts[3];
    let boundary_components = face_components(complex, &patch.boundary_faces).len();
    ContractibilityDiagnostic {
        euler,
        boundary_components,
        pass: euler == 1 && boundary_components == 1,
    }
}

/// Groups faces into classes connected through shared edges.
pub fn face_components(complex: &SimplicialComplex, faces: &[usize]) -> Vec<Vec<usize>> {
    let n = faces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut by_edge: HashMap<usize, usize> = HashMap::new();
    for (k, &f) in faces.iter().enumerate() {
        for &e in complex.face_edges(f) {
            if let Some(&other) = by_edge.get(&e) {
                let (a, b) = (root(&mut parent, k), root(&mut parent, other));
                if a != b {
                    parent[a] = b;
                }
            } else {
                by_edge.insert(e, k);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &f) in faces.iter().enumerate() {
        let r = root(&mut parent, k);
        groups.entry(r).or_default().push(f);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}
