//! Local weight functions dual to the canonical degrees of freedom, built
//! level by level on the split extended stars.

mod build;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use build::{build_weight, WeightContext, COMPAT_TOL};

use crate::femspaces::{Layer, MeshLayers, PiecewiseField};
use crate::meshkit::{GammaPartition, Patch, SimplexClass};
use crate::patchsolve::SolveReport;
use crate::{Error, Result};

/// Weight of one simplex, stored on the split cells of its extended star.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub dim: usize,
    pub id: usize,
    pub class: SimplexClass,
    /// Base cells of the extended star.
    pub patch_cells: Vec<usize>,
    pub h: f64,
    pub l2_norm: f64,
    /// Split-layer field of form degree `3 - dim`.
    pub field: PiecewiseField,
    pub lift: Option<SolveReport>,
    pub solve: Option<SolveReport>,
}

impl Weight {
    fn zero(dim: usize, id: usize, class: SimplexClass, patch: &Patch) -> Weight {
        Weight {
            dim,
            id,
            class,
            patch_cells: patch.cells.clone(),
            h: patch.h,
            l2_norm: 0.0,
            field: PiecewiseField::from_pairs(Layer::Alfeld, 3 - dim, Vec::new()),
            lift: None,
            solve: None,
        }
    }

    /// `‖Z‖ h^{3/2 - dim}`, the quantity bounded independently of the mesh size.
    pub fn scaled_norm(&self) -> f64 {
        self.l2_norm * self.h.powf(1.5 - self.dim as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightMode {
    Plain,
    /// Weights dual to the spaces with zero trace on the listed faces.
    Gamma { faces: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub degree: usize,
    pub mode: WeightMode,
    /// `levels[l][id]` is the weight of the `l`-simplex `id`.
    pub levels: [Vec<Weight>; 4],
    /// Simplices whose patch surfaces split into several pieces.
    pub warnings: Vec<(usize, usize)>,
}

impl WeightSet {
    pub fn weight(&self, l: usize, id: usize) -> &Weight {
        &self.levels[l][id]
    }

    pub fn max_scaled_norm(&self, l: usize) -> f64 {
        self.levels[l].iter().fold(0.0, |m, w| m.max(w.scaled_norm()))
    }

    /// Text bundle: one block per simplex with its patch cells and
    /// coefficients. Floats use the shortest round-trip representation.
    pub fn to_bundle(&self) -> String {
        let mut s = String::new();
        // an empty constrained part gives the plain weights, and the same bundle
        match &self.mode {
            WeightMode::Gamma { faces } if !faces.is_empty() => {
                let _ = writeln!(s, "mode gamma {}", join(faces));
            }
            _ => s.push_str("mode plain\n"),
        }
        for level in &self.levels {
            for w in level {
                let _ = writeln!(s, "weight {} {} {:?}", w.dim, w.id, w.class);
                let _ = writeln!(s, "cells {}", join(&w.patch_cells));
                let _ = writeln!(s, "dofs {}", join(&w.field.dofs));
                let _ = writeln!(s, "coeffs {}", join(&w.field.coeffs));
            }
        }
        s
    }
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Coefficients of one bundle entry.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleEntry {
    pub dim: usize,
    pub id: usize,
    pub cells: Vec<usize>,
    pub field: PiecewiseField,
}

/// Reads the per-simplex blocks of a text bundle.
pub fn parse_bundle(text: &str) -> Result<Vec<BundleEntry>> {
    let mut out: Vec<BundleEntry> = Vec::new();
    let err = |line: usize, message: &str| Error::Parse {
        line: line + 1,
        message: message.to_string(),
    };
    fn nums<T: std::str::FromStr>(rest: &str) -> Option<Vec<T>> {
        rest.split_whitespace().map(|t| t.parse().ok()).collect()
    }
    for (n, line) in text.lines().enumerate() {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "mode" | "" => {}
            "weight" => {
                let mut it = rest.split_whitespace();
                let dim: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(n, "bad dim"))?;
                let id: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(n, "bad id"))?;
                if dim > 3 {
                    return Err(err(n, "dimension above 3"));
                }
                out.push(BundleEntry {
                    dim,
                    id,
                    cells: Vec::new(),
                    field: PiecewiseField::from_pairs(Layer::Alfeld, 3 - dim, Vec::new()),
                });
            }
            "cells" | "dofs" | "coeffs" => {
                let e = out.last_mut().ok_or_else(|| err(n, "data before weight header"))?;
                match key {
                    "cells" => e.cells = nums(rest).ok_or_else(|| err(n, "bad cell id"))?,
                    "dofs" => e.field.dofs = nums(rest).ok_or_else(|| err(n, "bad dof id"))?,
                    _ => {
                        e.field.coeffs = nums(rest).ok_or_else(|| err(n, "bad coefficient"))?;
                        if e.field.coeffs.len() != e.field.dofs.len() {
                            return Err(err(n, "coefficient count differs from dof count"));
                        }
                    }
                }
            }
            _ => return Err(err(n, "unknown record")),
        }
    }
    Ok(out)
}

pub fn weight_vertex(ctx: &WeightContext, v: usize) -> Result<Weight> {
    build_weight(ctx, 0, v, &[])
}

/// `z0` holds the vertex weights indexed by vertex id.
pub fn weight_edge(ctx: &WeightContext, e: usize, z0: &[Weight]) -> Result<Weight> {
    build_weight(ctx, 1, e, z0)
}

pub fn weight_face(ctx: &WeightContext, f: usize, z1: &[Weight]) -> Result<Weight> {
    build_weight(ctx, 2, f, z1)
}

pub fn weight_cell(ctx: &WeightContext, t: usize, z2: &[Weight]) -> Result<Weight> {
    build_weight(ctx, 3, t, z2)
}

fn build_levels(ctx: &WeightContext) -> Result<[Vec<Weight>; 4]> {
    let mut levels: [Vec<Weight>; 4] = Default::default();
    for l in 0..4 {
        let lower = if l == 0 { &[][..] } else { &levels[l - 1][..] };
        let level = (0..ctx.layers.base.count(l))
            .into_par_iter()
            .map(|id| build_weight(ctx, l, id, lower))
            .collect::<Result<Vec<_>>>()?;
        levels[l] = level;
    }
    Ok(levels)
}

/// All weights dual to the full lowest-order spaces.
pub fn weight_set(layers: &MeshLayers) -> Result<WeightSet> {
    let ctx = WeightContext::new(layers, None);
    Ok(WeightSet {
        degree: 0,
        mode: WeightMode::Plain,
        levels: build_levels(&ctx)?,
        warnings: Vec::new(),
    })
}

/// Weights dual to the spaces with zero trace on the constrained faces of
/// `partition`. Boundary simplices get zero weight and interior ones the
/// plain weight.
pub fn weight_set_gamma(layers: &MeshLayers, partition: &GammaPartition) -> Result<WeightSet> {
    let ctx = WeightContext::new(layers, Some(partition));
    Ok(WeightSet {
        degree: 0,
        mode: WeightMode::Gamma {
            faces: partition.gamma_faces.clone(),
        },
        levels: build_levels(&ctx)?,
        warnings: partition.warnings.clone(),
    })
}
