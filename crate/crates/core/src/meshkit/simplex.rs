use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Local vertex pairs of the six edges of a tetrahedron, in the order used by
/// every per-cell table in the crate.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the four faces of a tetrahedron; face `k` omits
/// local vertex `k`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Local vertex pairs of the three edges of a triangle; edge `k` omits local
/// vertex `k`.
pub const TRIANGLE_EDGES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];

/// A simplex given by its vertex ids in strictly increasing order, which is
/// also its orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientedSimplex {
    dim: usize,
    ids: [usize; 4],
}

impl OrientedSimplex {
    /// Builds a simplex from vertex ids in any order.
    pub fn new(ids: &[usize]) -> Result<Self> {
        if ids.is_empty() || ids.len() > 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: ids.len(),
            });
        }
        let mut sorted = [usize::MAX; 4];
        sorted[..ids.len()].copy_from_slice(ids);
        sorted[..ids.len()].sort_unstable();
        if sorted[..ids.len()].windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::UnknownSimplex(ids.to_vec()));
        }
        Ok(Self {
            dim: ids.len() - 1,
            ids: sorted,
        })
    }

    pub fn vertex(v: usize) -> Self {
        Self {
            dim: 0,
            ids: [v, usize::MAX, usize::MAX, usize::MAX],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[usize] {
        &self.ids[..=self.dim]
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices().contains(&v)
    }

    /// True when every vertex of `self` is a vertex of `other`.
    pub fn is_subsimplex_of(&self, other: &OrientedSimplex) -> bool {
        self.vertices().iter().all(|v| other.contains_vertex(*v))
    }

    /// Boundary simplices paired with their incidence sign `(-1)^j`, where `j`
    /// is the position of the omitted vertex.
    pub fn boundary(&self) -> Vec<(OrientedSimplex, i64)> {
        if self.dim == 0 {
            return Vec::new();
        }
        let verts = self.vertices();
        (0..verts.len())
            .map(|j| {
                let rest: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| *v)
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                (OrientedSimplex::new(&rest).expect("sub-simplex of a valid simplex"), sign)
            })
            .collect()
    }
}

/// Sorted copy of an edge.
pub fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Sorted copy of a triangle.
pub fn sorted3(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}
