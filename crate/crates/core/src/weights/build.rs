use nalgebra as na;

use super::Weight;
use crate::femspaces::{
    assemble_space, eval_derivative, num_local, pair_matrix, weighted_stiffness, Bc, Layer, MeshLayers,
    PatchSpace, PiecewiseField, SpaceSpec,
};
use crate::meshkit::{contractibility_check, extended_star, GammaPartition, Patch, PatchSurfaces, SimplexClass};
use crate::patchsolve::{
    bordered_solve, kernel_with_cohomology, min_norm_lift, min_norm_lift_with_conditions, KernelBasis,
};
use crate::{Error, Result};

/// Relative size of a compatibility defect treated as exact zero.
pub const COMPAT_TOL: f64 = 1e-10;

/// Sign of the lower-level sum in `B β = sign · Σ ι Z`, by level.
const TARGET_SIGN: [f64; 4] = [0.0, -1.0, 1.0, -1.0];

/// Read-only data shared by every weight construction on one mesh.
pub struct WeightContext<'a> {
    pub layers: &'a MeshLayers,
    pub mu: PiecewiseField,
    pub partition: Option<&'a GammaPartition>,
}

impl<'a> WeightContext<'a> {
    pub fn new(layers: &'a MeshLayers, partition: Option<&'a GammaPartition>) -> Self {
        WeightContext {
            layers,
            mu: crate::femspaces::mu_bubble(layers),
            partition,
        }
    }

    pub fn class(&self, dim: usize, id: usize) -> SimplexClass {
        self.partition.map_or(SimplexClass::Interior, |p| p.class(dim, id))
    }
}

struct Spaces {
    lift: PatchSpace,
    lift_kernel: Option<KernelBasis>,
    test: Option<PatchSpace>,
    test_kernel: Option<KernelBasis>,
}

fn build_spaces(ctx: &WeightContext, l: usize, patch: &Patch, surfaces: Option<&PatchSurfaces>) -> Result<Spaces> {
    let layers = ctx.layers;
    let k = 3 - l;
    let lift_bc = match (surfaces.is_some(), l) {
        (_, 0) => Bc::None,
        (true, _) => Bc::GammacTrace,
        (false, _) => Bc::FullBoundary,
    };
    let test_bc = if surfaces.is_some() { Bc::GammaTrace } else { Bc::None };

    let lift = assemble_space(layers, patch, SpaceSpec::new(k, Layer::Alfeld, lift_bc), surfaces)?;
    let lift_kernel = if k < 3 {
        let prev = if k > 0 {
            Some(assemble_space(layers, patch, SpaceSpec::new(k - 1, Layer::Alfeld, lift_bc), surfaces)?)
        } else {
            None
        };
        Some(kernel_with_cohomology(layers, &lift, prev.as_ref())?)
    } else {
        None
    };

    let (test, test_kernel) = if l < 3 {
        let test = assemble_space(layers, patch, SpaceSpec::new(l, Layer::Base, test_bc), surfaces)?;
        let prev = if l > 0 {
            Some(assemble_space(layers, patch, SpaceSpec::new(l - 1, Layer::Base, test_bc), surfaces)?)
        } else {
            None
        };
        let kernel = kernel_with_cohomology(layers, &test, prev.as_ref())?;
        (Some(test), Some(kernel))
    } else {
        (None, None)
    };
    Ok(Spaces {
        lift,
        lift_kernel,
        test,
        test_kernel,
    })
}

/// Weight of the `l`-simplex `id`. `lower` holds the weights of level
/// `l - 1` indexed by simplex id (unused for vertices).
pub fn build_weight(ctx: &WeightContext, l: usize, id: usize, lower: &[Weight]) -> Result<Weight> {
    let out = build_weight_unchecked(ctx, l, id, lower);
    // a pinched or split trace surface breaks local exactness; report it as such
    let warned = ctx.partition.is_some_and(|p| p.warnings.contains(&(l, id)));
    match out {
        Err(
            Error::InconsistentTarget { .. }
            | Error::ExactnessViolation { .. }
            | Error::KernelResidual { .. }
            | Error::NumericalBreakdown { .. },
        ) if warned => Err(Error::NonConnectedTrace {
            simplex: ctx.layers.base.simplex_vertices(l, id).to_vec(),
        }),
        other => other,
    }
}

fn build_weight_unchecked(ctx: &WeightContext, l: usize, id: usize, lower: &[Weight]) -> Result<Weight> {
    let layers = ctx.layers;
    let base = &layers.base;
    let sigma = base.simplex(l, id);
    let class = ctx.class(l, id);
    let patch = extended_star(base, &sigma)?;
    if class == SimplexClass::Boundary {
        return Ok(Weight::zero(l, id, class, &patch));
    }
    let diag = contractibility_check(base, &patch);
    if !diag.pass {
        return Err(Error::NonContractiblePatch {
            simplex: sigma.vertices().to_vec(),
            euler: diag.euler,
            components: diag.boundary_components,
        });
    }
    let surfaces = match (class, ctx.partition) {
        (SimplexClass::Interface, Some(p)) => Some(p.surfaces(base, &patch)),
        _ => None,
    };
    let sp = build_spaces(ctx, l, &patch, surfaces.as_ref())?;
    let lift = &sp.lift;

    // pairing of base test functions with split lift functions over es(σ)
    let fine_cells = &lift.cells;
    let pairing = match &sp.test {
        Some(test) => Some(pair_matrix(
            layers,
            (Layer::Alfeld, fine_cells),
            (Layer::Base, l, &test.dofs),
            (Layer::Alfeld, 3 - l, &lift.dofs),
        )?),
        None => None,
    };
    let sigma_index = match &sp.test {
        Some(test) => Some(test.local_index(id).ok_or_else(|| Error::LayerMismatch(format!(
            "simplex {:?} has no free degree of freedom in its test space",
            sigma.vertices()
        )))?),
        None => None,
    };

    // first part: η₀, β₁, β₂ or η₃
    let (beta, lift_report) = if l == 0 {
        let vol: f64 = lift.cells.iter().map(|&c| layers.alfeld.complex.volume(c)).sum();
        let coeffs = lift.constant_vector(layers) / vol;
        (coeffs, None)
    } else {
        let target = lower_target(ctx, l, id, lower, lift)?;
        check_compatibility(ctx, l, lift, &target, surfaces.is_none())?;
        let kernel = sp.lift_kernel.as_ref().expect("lift kernel below the top degree");
        let harmonic = sp.test_kernel.as_ref().map_or(0, |k| k.harmonic_dim);
        let (x, report) = if harmonic > 0 {
            // duality on test-space harmonic directions is fixed by the lift
            let h = sp.test_kernel.as_ref().unwrap().harmonic();
            let p = pairing.as_ref().unwrap();
            let cond = p.transpose() * &h;
            let values = h.row(sigma_index.unwrap()).transpose();
            min_norm_lift_with_conditions(lift, kernel, &target, &cond, &values)?
        } else {
            min_norm_lift(lift, kernel, &target)?
        };
        (x, Some(report))
    };

    // second part: the bubble-weighted correction
    let mut coeffs = beta.clone();
    let mut solve_report = None;
    if let (Some(test), Some(kernel), Some(p), Some(si)) = (&sp.test, &sp.test_kernel, &pairing, sigma_index) {
        let mut rhs = -(p * &beta);
        rhs[si] += 1.0;
        let a = weighted_stiffness(layers, test, &ctx.mu)?;
        let (psi, report) = bordered_solve(&a, &test.mass, kernel, &rhs)?;
        for (dof, value) in correction(ctx, l, test, &psi) {
            let k = lift.local_index(dof).ok_or_else(|| Error::NumericalBreakdown {
                context: format!("weight of {:?}", sigma.vertices()),
                detail: "correction leaves the lift space".into(),
            })?;
            coeffs[k] += value;
        }
        solve_report = Some(report);
    }

    let field = lift.to_field(&coeffs);
    let l2_norm = coeffs.dot(&(&lift.mass * &coeffs)).max(0.0).sqrt();
    Ok(Weight {
        dim: l,
        id,
        class,
        patch_cells: patch.cells.clone(),
        h: patch.h,
        l2_norm,
        field,
        lift: lift_report,
        solve: solve_report,
    })
}

/// `sign · Σ ι Z(lower)` injected into the next space of the lift.
fn lower_target(ctx: &WeightContext, l: usize, id: usize, lower: &[Weight], lift: &PatchSpace) -> Result<na::DVector<f64>> {
    let row = &ctx.layers.base_incidence.of_degree(l - 1).rows[id];
    let mut t = na::DVector::zeros(lift.next_dofs.len());
    for &(s, iota) in row {
        let z = &lower[s].field;
        for (&dof, &c) in z.dofs.iter().zip(&z.coeffs) {
            match lift.next_dofs.binary_search(&dof) {
                Ok(k) => t[k] += TARGET_SIGN[l] * iota as f64 * c,
                Err(_) if c != 0.0 => {
                    return Err(Error::NumericalBreakdown {
                        context: format!("weight of {:?}", ctx.layers.base.simplex_vertices(l, id)),
                        detail: format!("lower weight of simplex {s} is supported outside the patch"),
                    })
                }
                Err(_) => {}
            }
        }
    }
    Ok(t)
}

/// The target must lie in the range of the lift derivative: zero mean for
/// level one without free boundary, closed under the next derivative above.
fn check_compatibility(
    ctx: &WeightContext,
    l: usize,
    lift: &PatchSpace,
    target: &na::DVector<f64>,
    full_boundary: bool,
) -> Result<()> {
    let fine = &ctx.layers.alfeld.complex;
    let scale = target.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let defect = if l == 1 {
        if !full_boundary {
            return Ok(());
        }
        lift.next_dofs
            .iter()
            .zip(target.iter())
            .map(|(&c, &v)| fine.orientation(c) * v)
            .sum::<f64>()
            .abs()
    } else {
        // apply the derivative following the target's degree
        let d = ctx.layers.alfeld_incidence.of_degree(4 - l);
        let mut rows: Vec<usize> = lift
            .cells
            .iter()
            .flat_map(|&c| fine.cell_subsimplices(5 - l, c).iter().copied())
            .collect();
        rows.sort_unstable();
        rows.dedup();
        let out: Vec<f64> = rows
            .iter()
            .map(|&r| {
                d.rows[r]
                    .iter()
                    .filter_map(|&(col, s)| lift.next_dofs.binary_search(&col).ok().map(|k| s as f64 * target[k]))
                    .sum()
            })
            .collect();
        out.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    if defect > COMPAT_TOL * scale {
        return Err(Error::InconsistentTarget {
            residual: defect / scale,
        });
    }
    Ok(())
}

/// Exact split-layer coefficients of `∓ d(μ dψ)` for ψ in the base space.
fn correction(ctx: &WeightContext, l: usize, test: &PatchSpace, psi: &na::DVector<f64>) -> Vec<(usize, f64)> {
    let layers = ctx.layers;
    let alfeld = &layers.alfeld;
    let fine = &alfeld.complex;
    let inc = &layers.alfeld_incidence;
    let mut out = Vec::new();
    for &t in &test.cells {
        let d = eval_derivative(l, &layers.base_geometry[t]);
        let mut g = crate::Point::zeros();
        for (k, &s) in layers.base.cell_subsimplices(l, t)[..num_local(l)].iter().enumerate() {
            if let Some(i) = test.local_index(s) {
                g += d[k] * psi[i];
            }
        }
        let b = alfeld.barycenter(t);
        let xb = fine.vertex(b);
        match l {
            0 => {
                // fluxes of μ g through the split faces meeting the barycenter
                let mut faces: Vec<usize> = alfeld
                    .children(t)
                    .iter()
                    .flat_map(|&c| fine.cell_subsimplices(2, c).iter().copied())
                    .filter(|&f| fine.simplex_vertices(2, f).contains(&b))
                    .collect();
                faces.sort_unstable();
                faces.dedup();
                for c in alfeld.children(t) {
                    for &(f, s) in &inc.d.rows[c] {
                        if faces.binary_search(&f).is_ok() {
                            let v = fine.simplex_vertices(2, f);
                            let (x0, x1, x2) = (fine.vertex(v[0]), fine.vertex(v[1]), fine.vertex(v[2]));
                            let flux = g.dot(&(x1 - x0).cross(&(x2 - x0))) / 6.0;
                            out.push((c, -(s as f64) * flux));
                        }
                    }
                }
            }
            1 => {
                // circulations of μ c along the edges ending at the barycenter
                let mut faces: Vec<usize> = alfeld
                    .children(t)
                    .iter()
                    .flat_map(|&c| fine.cell_subsimplices(2, c).iter().copied())
                    .collect();
                faces.sort_unstable();
                faces.dedup();
                for f in faces {
                    for &(e, s) in &inc.c.rows[f] {
                        let v = fine.simplex_vertices(1, e);
                        if v[1] == b {
                            let val = 0.5 * g.dot(&(xb - fine.vertex(v[0])));
                            out.push((f, s as f64 * val));
                        }
                    }
                }
            }
            2 => {
                let mut edges: Vec<usize> = alfeld
                    .children(t)
                    .iter()
                    .flat_map(|&c| fine.cell_subsimplices(1, c).iter().copied())
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                for e in edges {
                    for &(v, s) in &inc.g.rows[e] {
                        if v == b {
                            out.push((e, -(s as f64) * g.x));
                        }
                    }
                }
            }
            _ => unreachable!("no correction at the top level"),
        }
    }
    out
}
