use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::simplex::TRIANGLE_EDGES;
use super::SimplicialComplex;

/// Sparse integer matrix stored by rows, columns sorted within each row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, i64)>>,
}

impl IntMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map_or(0, |(_, v)| *v)
    }

    /// Exact integer product `self * other`.
    pub fn matmul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = IntMatrix::zeros(self.nrows, other.ncols);
        let mut acc = vec![0i64; other.ncols];
        let mut touched = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    if acc[j] == 0 {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &j in &touched {
                if acc[j] != 0 {
                    out.rows[i].push((j, acc[j]));
                }
                acc[j] = 0;
            }
            touched.clear();
        }
        out
    }

    /// Exact product with the all-ones vector.
    pub fn row_sums(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v).sum()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|(_, v)| *v == 0))
    }

    /// Restriction to the listed rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut out = IntMatrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            let mut row: Vec<(usize, i64)> = self.rows[r]
                .iter()
                .filter(|(c, _)| col_map[*c] != usize::MAX)
                .map(|(c, v)| (col_map[*c], *v))
                .collect();
            row.sort_unstable();
            out.rows[i] = row;
        }
        out
    }

    pub fn to_dense(&self) -> na::DMatrix<f64> {
        let mut m = na::DMatrix::zeros(self.nrows, self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v as f64;
            }
        }
        m
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.ncols, self.nrows);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out.rows[j].push((i, v));
            }
        }
        out
    }
}

/// Incidence matrices `G` (edges x vertices), `C` (faces x edges) and
/// `D` (cells x faces), with entries `(-1)^j` for the omitted vertex `j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncidenceMatrices {
    pub g: IntMatrix,
    pub c: IntMatrix,
    pub d: IntMatrix,
}

impl IncidenceMatrices {
    /// Incidence matrix realising the differential on `l`-cochains.
    pub fn of_degree(&self, l: usize) -> &IntMatrix {
        match l {
            0 => &self.g,
            1 => &self.c,
            _ => &self.d,
        }
    }
}

pub fn incidence(complex: &SimplicialComplex) -> IncidenceMatrices {
    let mut g = IntMatrix::zeros(complex.num_edges(), complex.num_vertices());
    for (e, v) in complex.edges().iter().enumerate() {
        g.rows[e] = vec![(v[0], -1), (v[1], 1)];
    }
    let mut c = IntMatrix::zeros(complex.num_faces(), complex.num_edges());
    for f in 0..complex.num_faces() {
        let fe = complex.face_edges(f);
        let mut row: Vec<(usize, i64)> = (0..3)
            .map(|k| (fe[k], if k % 2 == 0 { 1 } else { -1 }))
            .collect();
        row.sort_unstable();
        c.rows[f] = row;
    }
    let mut d = IntMatrix::zeros(complex.num_cells(), complex.num_faces());
    for t in 0..complex.num_cells() {
        let tf = complex.cell_subsimplices(2, t);
        let mut row: Vec<(usize, i64)> = (0..4)
            .map(|k| (tf[k], if k % 2 == 0 { 1 } else { -1 }))
            .collect();
        row.sort_unstable();
        d.rows[t] = row;
    }
    IncidenceMatrices { g, c, d }
}

/// Local incidence of a tetrahedron between its `l+1`- and `l`-simplices in
/// local order, as a dense table `[row][col]`.
pub fn local_incidence(l: usize) -> Vec<Vec<i64>> {
    use super::simplex::{LOCAL_EDGES, LOCAL_FACES};
    match l {
        0 => LOCAL_EDGES
            .iter()
            .map(|e| {
                let mut r = vec![0; 4];
                r[e[0]] = -1;
                r[e[1]] = 1;
                r
            })
            .collect(),
        1 => LOCAL_FACES
            .iter()
            .map(|f| {
                let mut r = vec![0; 6];
                for (k, te) in TRIANGLE_EDGES.iter().enumerate() {
                    let pair = [f[te[0]], f[te[1]]];
                    let idx = LOCAL_EDGES.iter().position(|e| *e == pair).unwrap();
                    r[idx] = if k % 2 == 0 { 1 } else { -1 };
                }
                r
            })
            .collect(),
        _ => vec![(0..4).map(|k| if k % 2 == 0 { 1 } else { -1 }).collect()],
    }
}
