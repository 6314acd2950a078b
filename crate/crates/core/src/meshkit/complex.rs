use std::collections::HashMap;

use nalgebra as na;

use super::simplex::{sorted2, sorted3, OrientedSimplex, LOCAL_EDGES, LOCAL_FACES, TRIANGLE_EDGES};
use crate::{Error, Point, Result};

/// Oriented tetrahedral mesh with derived edges and faces.
///
/// All simplices are stored with increasing vertex ids; per-cell tables list
/// sub-simplices in the local order of [`LOCAL_EDGES`] and [`LOCAL_FACES`].
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    edge_lookup: HashMap<[usize; 2], usize>,
    face_lookup: HashMap<[usize; 3], usize>,
    cell_lookup: HashMap<[usize; 4], usize>,
    cell_edges: Vec<[usize; 6]>,
    cell_faces: Vec<[usize; 4]>,
    face_edges: Vec<[usize; 3]>,
    face_cells: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    cell_ids: Vec<usize>,
    vertex_ids: Vec<usize>,
    orientation: Vec<f64>,
    volumes: Vec<f64>,
    shape_regularity: f64,
}

/// Signed determinant of `(x1-x0, x2-x0, x3-x0)`.
pub fn signed_det(x: &[Point; 4]) -> f64 {
    na::Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]).determinant()
}

/// Diameter of the inscribed ball of a tetrahedron.
pub fn inscribed_diameter(x: &[Point; 4]) -> f64 {
    let vol = signed_det(x).abs() / 6.0;
    let area: f64 = LOCAL_FACES
        .iter()
        .map(|f| 0.5 * (x[f[1]] - x[f[0]]).cross(&(x[f[2]] - x[f[0]])).norm())
        .sum();
    6.0 * vol / area
}

/// Largest distance between two points of the list.
pub fn diameter(points: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            h = h.max((a - b).norm());
        }
    }
    h
}

/// Builds the complex, deriving edges and faces and checking conformity.
pub fn build_complex(vertices: Vec<Point>, tets: &[[usize; 4]]) -> Result<SimplicialComplex> {
    let nv = vertices.len();
    for t in tets {
        for &id in t {
            if id >= nv {
                return Err(Error::VertexOutOfRange { id, count: nv });
            }
        }
    }
    let scale = if vertices.is_empty() {
        1.0
    } else {
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for p in &vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm().max(f64::MIN_POSITIVE)
    };

    let mut cells = Vec::with_capacity(tets.len());
    let mut cell_lookup = HashMap::with_capacity(tets.len());
    let mut orientation = Vec::with_capacity(tets.len());
    let mut volumes = Vec::with_capacity(tets.len());
    let mut shape_regularity: f64 = 1.0;
    for (c, t) in tets.iter().enumerate() {
        let mut s = *t;
        s.sort_unstable();
        let x = [vertices[s[0]], vertices[s[1]], vertices[s[2]], vertices[s[3]]];
        let det = signed_det(&x);
        if s.windows(2).any(|w| w[0] == w[1]) || det.abs() <= 1e-14 * scale.powi(3) {
            return Err(Error::DegenerateCell { cell: c, det });
        }
        if cell_lookup.insert(s, c).is_some() {
            return Err(Error::DuplicateCell { cell: s });
        }
        orientation.push(det.signum());
        volumes.push(det.abs() / 6.0);
        shape_regularity = shape_regularity.max(diameter(&x) / inscribed_diameter(&x));
        cells.push(s);
    }

    let mut edges = Vec::new();
    let mut edge_lookup = HashMap::new();
    let mut faces = Vec::new();
    let mut face_lookup = HashMap::new();
    let mut cell_edges = Vec::with_capacity(cells.len());
    let mut cell_faces = Vec::with_capacity(cells.len());
    let mut face_cells: Vec<Vec<usize>> = Vec::new();
    let mut vertex_cells = vec![Vec::new(); nv];
    for (c, s) in cells.iter().enumerate() {
        for &v in s {
            vertex_cells[v].push(c);
        }
        let mut ce = [0; 6];
        for (k, le) in LOCAL_EDGES.iter().enumerate() {
            let key = [s[le[0]], s[le[1]]];
            ce[k] = *edge_lookup.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
        }
        cell_edges.push(ce);
        let mut cf = [0; 4];
        for (k, lf) in LOCAL_FACES.iter().enumerate() {
            let key = [s[lf[0]], s[lf[1]], s[lf[2]]];
            let id = *face_lookup.entry(key).or_insert_with(|| {
                faces.push(key);
                face_cells.push(Vec::new());
                faces.len() - 1
            });
            face_cells[id].push(c);
            if face_cells[id].len() > 2 {
                return Err(Error::NonManifoldFace { face: key });
            }
            cf[k] = id;
        }
        cell_faces.push(cf);
    }
    let face_edges = faces
        .iter()
        .map(|f| {
            let mut fe = [0; 3];
            for (k, te) in TRIANGLE_EDGES.iter().enumerate() {
                fe[k] = edge_lookup[&[f[te[0]], f[te[1]]]];
            }
            fe
        })
        .collect();
    let cell_ids = (0..cells.len()).collect();
    let vertex_ids = (0..nv).collect();

    Ok(SimplicialComplex {
        vertices,
        cells,
        edges,
        faces,
        edge_lookup,
        face_lookup,
        cell_lookup,
        cell_edges,
        cell_faces,
        face_edges,
        face_cells,
        vertex_cells,
        cell_ids,
        vertex_ids,
        orientation,
        volumes,
        shape_regularity,
    })
}

impl SimplicialComplex {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Number of simplices of dimension `dim`.
    pub fn count(&self, dim: usize) -> usize {
        match dim {
            0 => self.vertices.len(),
            1 => self.edges.len(),
            2 => self.faces.len(),
            3 => self.cells.len(),
            _ => 0,
        }
    }

    /// Vertex ids of simplex `id` of dimension `dim`.
    pub fn simplex_vertices(&self, dim: usize, id: usize) -> &[usize] {
        match dim {
            0 => std::slice::from_ref(&self.vertex_ids[id]),
            1 => &self.edges[id],
            2 => &self.faces[id],
            _ => &self.cells[id],
        }
    }

    pub fn simplex(&self, dim: usize, id: usize) -> OrientedSimplex {
        match dim {
            0 => OrientedSimplex::vertex(id),
            _ => OrientedSimplex::new(self.simplex_vertices(dim, id)).expect("stored simplex"),
        }
    }

    /// Index of `s` in the list of simplices of its dimension.
    pub fn find(&self, s: &OrientedSimplex) -> Option<usize> {
        let v = s.vertices();
        match s.dim() {
            0 => (v[0] < self.vertices.len()).then_some(v[0]),
            1 => self.edge_lookup.get(&[v[0], v[1]]).copied(),
            2 => self.face_lookup.get(&[v[0], v[1], v[2]]).copied(),
            3 => self.cell_lookup.get(&[v[0], v[1], v[2], v[3]]).copied(),
            _ => None,
        }
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&sorted2(a, b)).copied()
    }

    pub fn face_id(&self, f: [usize; 3]) -> Option<usize> {
        self.face_lookup.get(&sorted3(f)).copied()
    }

    /// Sub-simplices of dimension `dim` of cell `c`, in local order.
    pub fn cell_subsimplices(&self, dim: usize, c: usize) -> &[usize] {
        match dim {
            0 => &self.cells[c],
            1 => &self.cell_edges[c],
            2 => &self.cell_faces[c],
            _ => std::slice::from_ref(&self.cell_ids[c]),
        }
    }

    /// Edges of face `f`; edge `k` omits local vertex `k`.
    pub fn face_edges(&self, f: usize) -> &[usize; 3] {
        &self.face_edges[f]
    }

    /// Cells containing face `f` (one for boundary faces, two otherwise).
    pub fn face_cells(&self, f: usize) -> &[usize] {
        &self.face_cells[f]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].len() == 1
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.is_boundary_face(f)).collect()
    }

    /// Sign of `det(x1-x0, x2-x0, x3-x0)` for cell `c`.
    pub fn orientation(&self, c: usize) -> f64 {
        self.orientation[c]
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.volumes[c]
    }

    pub fn cell_points(&self, c: usize) -> [Point; 4] {
        let s = self.cells[c];
        [
            self.vertices[s[0]],
            self.vertices[s[1]],
            self.vertices[s[2]],
            self.vertices[s[3]],
        ]
    }

    /// Ratio of diameter to inscribed-ball diameter, maximised over cells.
    pub fn shape_regularity(&self) -> f64 {
        self.shape_regularity
    }

    /// Sub-simplices of dimension `dim` of the simplex `id` of dimension
    /// `sdim` (which must be 2 or less).
    pub fn subsimplices_of(&self, sdim: usize, id: usize, dim: usize) -> Vec<usize> {
        if dim == sdim {
            return vec![id];
        }
        match (sdim, dim) {
            (1, 0) => self.edges[id].to_vec(),
            (2, 0) => self.faces[id].to_vec(),
            (2, 1) => self.face_edges[id].to_vec(),
            _ => Vec::new(),
        }
    }

    /// Marks the simplices of dimension `dim` that are sub-simplices of at
    /// least one of the given faces.
    pub fn face_closure(&self, faces: &[usize], dim: usize) -> Vec<bool> {
        let mut mark = vec![false; self.count(dim)];
        for &f in faces {
            for s in self.subsimplices_of(2, f, dim) {
                mark[s] = true;
            }
        }
        mark
    }
}
