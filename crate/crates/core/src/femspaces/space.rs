use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::field::PiecewiseField;
use super::quadrature::{tet_rule, TetRule};
use super::whitney::{basis_degree, components, eval_basis, eval_derivative, num_local, CellGeometry};
use crate::meshkit::{
    incidence, AlfeldComplex, IncidenceMatrices, IntMatrix, Patch, PatchSurfaces, SimplicialComplex,
};
use crate::{Error, Result};

/// Which mesh a space lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    Base,
    Alfeld,
}

/// Boundary condition of a patch space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc {
    None,
    /// Zero trace on the whole patch boundary (split layer only).
    FullBoundary,
    /// Zero trace on the constrained part of the patch boundary (base layer).
    GammaTrace,
    /// Zero trace on the free part of the patch boundary (split layer).
    GammacTrace,
    /// Piecewise constants with zero mean (form degree 3 only).
    MeanZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub form_degree: usize,
    pub poly_degree: usize,
    pub layer: Layer,
    pub bc: Bc,
}

impl SpaceSpec {
    pub fn new(form_degree: usize, layer: Layer, bc: Bc) -> SpaceSpec {
        SpaceSpec {
            form_degree,
            poly_degree: 0,
            layer,
            bc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.poly_degree != 0 {
            return Err(Error::UnsupportedDegree(self.poly_degree));
        }
        if self.form_degree > 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: self.form_degree,
            });
        }
        match (self.bc, self.layer) {
            (Bc::FullBoundary | Bc::GammacTrace, Layer::Base) => Err(Error::LayerMismatch(format!(
                "{:?} requires the split layer",
                self.bc
            ))),
            (Bc::GammaTrace, Layer::Alfeld) => Err(Error::LayerMismatch(
                "GammaTrace lives on the base layer".into(),
            )),
            (Bc::MeanZero, _) if self.form_degree != 3 => Err(Error::LayerMismatch(
                "MeanZero applies to form degree 3 only".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// The base mesh, its barycentric refinement and derived data shared by
/// every patch computation.
#[derive(Clone, Debug)]
pub struct MeshLayers {
    pub base: SimplicialComplex,
    pub alfeld: AlfeldComplex,
    pub base_incidence: IncidenceMatrices,
    pub alfeld_incidence: IncidenceMatrices,
    pub base_geometry: Vec<CellGeometry>,
    pub alfeld_geometry: Vec<CellGeometry>,
    pub rule: TetRule,
}

impl MeshLayers {
    pub fn new(base: SimplicialComplex) -> Result<MeshLayers> {
        let alfeld = AlfeldComplex::new(&base)?;
        let base_geometry = (0..base.num_cells()).map(|c| CellGeometry::of_cell(&base, c)).collect();
        let alfeld_geometry = (0..alfeld.complex.num_cells())
            .map(|c| CellGeometry::of_cell(&alfeld.complex, c))
            .collect();
        Ok(MeshLayers {
            base_incidence: incidence(&base),
            alfeld_incidence: incidence(&alfeld.complex),
            base,
            alfeld,
            base_geometry,
            alfeld_geometry,
            rule: tet_rule(),
        })
    }

    pub fn complex(&self, layer: Layer) -> &SimplicialComplex {
        match layer {
            Layer::Base => &self.base,
            Layer::Alfeld => &self.alfeld.complex,
        }
    }

    pub fn incidence(&self, layer: Layer) -> &IncidenceMatrices {
        match layer {
            Layer::Base => &self.base_incidence,
            Layer::Alfeld => &self.alfeld_incidence,
        }
    }

    pub fn geometry(&self, layer: Layer, c: usize) -> &CellGeometry {
        match layer {
            Layer::Base => &self.base_geometry[c],
            Layer::Alfeld => &self.alfeld_geometry[c],
        }
    }

    /// Cells of `layer` covering the base cells of `patch`.
    pub fn layer_cells(&self, patch: &Patch, layer: Layer) -> Vec<usize> {
        match layer {
            Layer::Base => patch.cells.clone(),
            Layer::Alfeld => patch.cells.iter().flat_map(|&t| self.alfeld.children(t)).collect(),
        }
    }

    /// Base faces mapped to `layer`.
    pub fn faces_in(&self, faces: &[usize], layer: Layer) -> Vec<usize> {
        let mut out: Vec<usize> = match layer {
            Layer::Base => faces.to_vec(),
            Layer::Alfeld => faces.iter().map(|&f| self.alfeld.base_to_alfeld(2, f)).collect(),
        };
        out.sort_unstable();
        out
    }
}

/// Lowest-order space of one form degree on a set of cells, with the DOFs
/// on a constrained face set removed.
#[derive(Clone, Debug)]
pub struct PatchSpace {
    pub spec: SpaceSpec,
    /// Cells of the layer complex.
    pub cells: Vec<usize>,
    /// Sorted ids of the simplices carrying a DOF.
    pub dofs: Vec<usize>,
    /// Sorted DOF ids of the next space in the sequence (same constraint).
    pub next_dofs: Vec<usize>,
    /// Constrained faces (layer ids).
    pub constrained_faces: Vec<usize>,
    pub mass: na::DMatrix<f64>,
    /// Exterior derivative from this space into the next, `next_dofs x dofs`.
    pub diff: IntMatrix,
}

impl PatchSpace {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn layer(&self) -> Layer {
        self.spec.layer
    }

    pub fn form_degree(&self) -> usize {
        self.spec.form_degree
    }

    pub fn local_index(&self, id: usize) -> Option<usize> {
        self.dofs.binary_search(&id).ok()
    }

    pub fn diff_dense(&self) -> na::DMatrix<f64> {
        self.diff.to_dense()
    }

    /// Coefficients of the constant function 1 (form degree 0 or 3).
    pub fn constant_vector(&self, layers: &MeshLayers) -> na::DVector<f64> {
        let complex = layers.complex(self.layer());
        match self.form_degree() {
            0 => na::DVector::from_element(self.dim(), 1.0),
            3 => na::DVector::from_iterator(
                self.dim(),
                self.dofs.iter().map(|&c| complex.orientation(c) * complex.volume(c)),
            ),
            _ => panic!("constants are scalar fields"),
        }
    }

    /// Embeds local coefficients into a field with global ids.
    pub fn to_field(&self, coeffs: &na::DVector<f64>) -> PiecewiseField {
        PiecewiseField {
            layer: self.layer(),
            form_degree: self.form_degree(),
            dofs: self.dofs.clone(),
            coeffs: coeffs.iter().copied().collect(),
        }
    }

    /// Local coefficients of a field; ids outside the space must carry zero
    /// coefficients, otherwise the largest offending magnitude is returned as
    /// the error value.
    pub fn restrict(&self, field: &PiecewiseField) -> std::result::Result<na::DVector<f64>, f64> {
        let mut out = na::DVector::zeros(self.dim());
        let mut outside: f64 = 0.0;
        for (&id, &c) in field.dofs.iter().zip(&field.coeffs) {
            match self.local_index(id) {
                Some(k) => out[k] = c,
                None => outside = outside.max(c.abs()),
            }
        }
        if outside > 0.0 {
            Err(outside)
        } else {
            Ok(out)
        }
    }
}

/// Sorted simplices of dimension `dim` of the cells, minus those lying on
/// the constrained faces.
fn free_simplices(complex: &SimplicialComplex, cells: &[usize], dim: usize, constrained: &[usize]) -> Vec<usize> {
    let blocked = complex.face_closure(constrained, dim.min(2));
    let mut out: Vec<usize> = cells
        .iter()
        .flat_map(|&c| complex.cell_subsimplices(dim, c).iter().copied())
        .filter(|&s| dim == 3 || !blocked[s])
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Assembles a space directly from a cell set and constrained faces of
/// the layer named in `spec`.
pub fn assemble_on_cells(
    layers: &MeshLayers,
    spec: SpaceSpec,
    cells: &[usize],
    constrained_faces: &[usize],
) -> Result<PatchSpace> {
    spec.validate()?;
    let layer = spec.layer;
    let l = spec.form_degree;
    let complex = layers.complex(layer);
    let dofs = free_simplices(complex, cells, l, constrained_faces);
    let next_dofs = if l < 3 {
        free_simplices(complex, cells, l + 1, constrained_faces)
    } else {
        Vec::new()
    };
    let diff = if l < 3 {
        layers.incidence(layer).of_degree(l).submatrix(&next_dofs, &dofs)
    } else {
        IntMatrix::zeros(0, dofs.len())
    };
    let mass = pair_matrix(layers, (layer, cells), (layer, l, &dofs), (layer, l, &dofs))?;
    Ok(PatchSpace {
        spec,
        cells: cells.to_vec(),
        dofs,
        next_dofs,
        constrained_faces: constrained_faces.to_vec(),
        mass,
        diff,
    })
}

/// Assembles the space described by `spec` on `patch`. Trace conditions
/// relative to a constrained boundary part need its `surfaces`.
pub fn assemble_space(
    layers: &MeshLayers,
    patch: &Patch,
    spec: SpaceSpec,
    surfaces: Option<&PatchSurfaces>,
) -> Result<PatchSpace> {
    spec.validate()?;
    let cells = layers.layer_cells(patch, spec.layer);
    let missing = || Error::LayerMismatch(format!("{:?} needs the patch boundary split", spec.bc));
    let constrained = match spec.bc {
        Bc::None | Bc::MeanZero => Vec::new(),
        Bc::FullBoundary => layers.faces_in(&patch.boundary_faces, spec.layer),
        Bc::GammaTrace => layers.faces_in(&surfaces.ok_or_else(missing)?.gamma, spec.layer),
        Bc::GammacTrace => layers.faces_in(&surfaces.ok_or_else(missing)?.gammac, spec.layer),
    };
    assemble_on_cells(layers, spec, &cells, &constrained)
}

/// `∫ u_i · v_j` over the `region` cells for Whitney bases given by
/// `(layer, form degree, sorted ids)` on rows and columns. Each region cell
/// must lie inside one cell of each basis layer (the split layer refines the
/// base layer), so every integrand is a polynomial of degree at most two.
pub fn pair_matrix(
    layers: &MeshLayers,
    region: (Layer, &[usize]),
    rows: (Layer, usize, &[usize]),
    cols: (Layer, usize, &[usize]),
) -> Result<na::DMatrix<f64>> {
    let (rlayer, cells) = region;
    let (alayer, k, adofs) = rows;
    let (blayer, l, bdofs) = cols;
    if components(k) != components(l) {
        return Err(Error::DegreeMismatch {
            expected: k,
            found: l,
        });
    }
    if rlayer == Layer::Base && (alayer == Layer::Alfeld || blayer == Layer::Alfeld) {
        return Err(Error::LayerMismatch(
            "integration region must be at least as fine as both bases".into(),
        ));
    }
    layers.rule.require(basis_degree(k) + basis_degree(l))?;
    let owner = |layer: Layer, c: usize| -> usize {
        if layer == rlayer {
            c
        } else {
            layers.alfeld.parent(c)
        }
    };
    let mut m = na::DMatrix::zeros(adofs.len(), bdofs.len());
    for &c in cells {
        let g = layers.geometry(rlayer, c);
        let ca = owner(alayer, c);
        let cb = owner(blayer, c);
        let ga = layers.geometry(alayer, ca);
        let gb = layers.geometry(blayer, cb);
        let ia: Vec<Option<usize>> = layers.complex(alayer).cell_subsimplices(k, ca)[..num_local(k)]
            .iter()
            .map(|s| adofs.binary_search(s).ok())
            .collect();
        let ib: Vec<Option<usize>> = layers.complex(blayer).cell_subsimplices(l, cb)[..num_local(l)]
            .iter()
            .map(|s| bdofs.binary_search(s).ok())
            .collect();
        if ia.iter().all(Option::is_none) || ib.iter().all(Option::is_none) {
            continue;
        }
        for (p, w) in layers.rule.unit_weights() {
            let x = g.point(p);
            let wa = eval_basis(k, ga, &ga.barycentric(&x));
            let wb = eval_basis(l, gb, &gb.barycentric(&x));
            let w = w * g.volume;
            for (i, ri) in ia.iter().enumerate() {
                let Some(ri) = ri else { continue };
                for (j, cj) in ib.iter().enumerate() {
                    let Some(cj) = cj else { continue };
                    m[(*ri, *cj)] += w * wa[i].dot(&wb[j]);
                }
            }
        }
    }
    Ok(m)
}

/// Bubble-weighted stiffness `∫ μ d(u_i) · d(u_j)` of a base-layer space.
/// The derivatives are constant per base cell; the weight is integrated on
/// the split cells, where `mu` is affine.
pub fn weighted_stiffness(layers: &MeshLayers, space: &PatchSpace, mu: &PiecewiseField) -> Result<na::DMatrix<f64>> {
    if space.layer() != Layer::Base || mu.layer != Layer::Alfeld || mu.form_degree != 0 {
        return Err(Error::LayerMismatch(
            "weighted stiffness needs a base space and a split-layer scalar weight".into(),
        ));
    }
    let l = space.form_degree();
    let n = space.dim();
    let mut a = na::DMatrix::zeros(n, n);
    if l == 3 {
        return Ok(a);
    }
    let fine = &layers.alfeld.complex;
    for &t in &space.cells {
        let mut weight = 0.0;
        for c in layers.alfeld.children(t) {
            let g = &layers.alfeld_geometry[c];
            let integral: f64 = layers
                .rule
                .unit_weights()
                .map(|(p, w)| w * mu.eval_with(fine, c, g, p).x)
                .sum();
            weight += g.volume * integral;
        }
        let d = eval_derivative(l, &layers.base_geometry[t]);
        let idx: Vec<Option<usize>> = layers.base.cell_subsimplices(l, t)[..num_local(l)]
            .iter()
            .map(|&s| space.local_index(s))
            .collect();
        for (i, ri) in idx.iter().enumerate() {
            let Some(ri) = ri else { continue };
            for (j, cj) in idx.iter().enumerate() {
                let Some(cj) = cj else { continue };
                a[(*ri, *cj)] += weight * d[i].dot(&d[j]);
            }
        }
    }
    Ok(a)
}
