//! Check suites shared by the command line driver and the acceptance
//! tests. Every check yields a record with the largest residual seen and
//! the tolerance it was held to.

use nalgebra as na;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::femspaces::{
    assemble_space, canonical_dof_field, eval_derivative, num_local, pair_matrix, whitney, CellGeometry, Layer,
    MeshLayers, PiecewiseField, PointField,
};
use crate::meshkit::{extended_star, reference_tet, GammaPartition, SimplexClass, SimplicialComplex};
use crate::patchsolve::{exact_nullity, exact_rank};
use crate::poincare::{
    patch_poincare, piola, piola_commutation_residual, piola_inverse, piola_weighted_identity_check, AffineCellMap,
    AffineField, PoincareResult, Sequence,
};
use crate::projections::{
    commutation_residual, derivative, max_trace_on_faces, project, stability_constants, InputField,
    ProjectionOperator,
};
use crate::weights::{WeightMode, WeightSet};
use crate::{Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Coefficient-level identities of the weights and projections.
    pub coeff: f64,
    /// Identities that go through quadrature of non-discrete inputs.
    pub quad: f64,
    /// Identities that hold up to rounding only (Whitney forms, discrete
    /// commutation, Piola round trips).
    pub exact: f64,
    /// Largest admitted level-to-level growth of a bounded quantity.
    pub plateau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coeff: 1e-10,
            quad: 1e-9,
            exact: 1e-12,
            plateau: 1.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// Plain statement of the property being checked.
    pub property: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(id: impl Into<String>, property: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            id: id.into(),
            property: property.into(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

/// Largest ratio between consecutive values; 1 for fewer than two values.
pub fn plateau_ratio(values: &[f64]) -> f64 {
    values.windows(2).fold(1.0f64, |m, w| m.max(w[1] / w[0]))
}

fn nonzeros(m: &crate::meshkit::IntMatrix) -> f64 {
    m.rows.iter().map(|r| r.iter().filter(|(_, v)| *v != 0).count()).sum::<usize>() as f64
}

/// `C G = 0`, `D C = 0` and `G 1 = 0` in integer arithmetic; the residual
/// counts nonzero entries.
pub fn incidence_checks(complex: &SimplicialComplex) -> Vec<CheckRecord> {
    let inc = crate::meshkit::incidence(complex);
    let row_sums = inc.g.row_sums().iter().filter(|&&s| s != 0).count() as f64;
    vec![
        CheckRecord::new("incidence.curl_grad", "curl of grad vanishes (C G = 0)", nonzeros(&inc.c.matmul(&inc.g)), 0.0),
        CheckRecord::new("incidence.div_curl", "div of curl vanishes (D C = 0)", nonzeros(&inc.d.matmul(&inc.c)), 0.0),
        CheckRecord::new("incidence.grad_const", "gradient of constants vanishes (G 1 = 0)", row_sums, 0.0),
    ]
}

/// Whitney forms against canonical DOFs (all pairs) and `d W_σ` against
/// the incidence combination of the next forms.
pub fn whitney_checks(complex: &SimplicialComplex, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let mut duality: f64 = 0.0;
    for l in 0..4 {
        let worst = (0..complex.count(l))
            .into_par_iter()
            .map(|s| -> Result<f64> {
                let w = whitney(complex, &complex.simplex(l, s))?;
                let mut worst: f64 = 0.0;
                for t in 0..complex.count(l) {
                    let v = canonical_dof_field(complex, &complex.simplex(l, t), &w)?;
                    worst = worst.max((v - if s == t { 1.0 } else { 0.0 }).abs());
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        duality = duality.max(worst);
    }

    let inc = crate::meshkit::incidence(complex);
    let mut relations: f64 = 0.0;
    let probes = [[0.25; 4], [0.1, 0.2, 0.3, 0.4], [0.7, 0.1, 0.1, 0.1]];
    for l in 0..3 {
        let bt = inc.of_degree(l).transpose();
        for s in 0..complex.count(l) {
            let image = PiecewiseField::from_pairs(Layer::Base, l + 1, bt.rows[s].iter().map(|&(r, v)| (r, v as f64)).collect());
            let v0 = complex.simplex_vertices(l, s)[0];
            for &c in complex.vertex_cells(v0) {
                let g = CellGeometry::of_cell(complex, c);
                let local = complex.cell_subsimplices(l, c)[..num_local(l)].iter().position(|&x| x == s);
                let direct = local.map_or(Point::zeros(), |k| eval_derivative(l, &g)[k]);
                for lam in &probes {
                    let via = image.eval_with(complex, c, &g, lam);
                    relations = relations.max((direct - via).norm() / direct.norm().max(1.0));
                }
            }
        }
    }
    Ok(vec![
        CheckRecord::new("whitney.duality", "Whitney forms are dual to the canonical DOFs", duality, tol.exact),
        CheckRecord::new("whitney.relations", "d W equals the incidence combination of Whitney forms", relations, tol.exact),
    ])
}

/// Kernel and range dimensions of the local sequences on every extended
/// star, by exact integer ranks. Returns the number of mismatches.
pub fn exactness_audit(layers: &MeshLayers) -> Result<CheckRecord> {
    let base = &layers.base;
    let jobs: Vec<(usize, usize)> = (0..4).flat_map(|d| (0..base.count(d)).map(move |i| (d, i))).collect();
    let mismatches: usize = jobs
        .into_par_iter()
        .map(|(dim, id)| -> Result<usize> {
            let patch = extended_star(base, &base.simplex(dim, id))?;
            let mut bad = 0;
            for seq in [Sequence::Plain, Sequence::Mathring] {
                let spaces = (0..4)
                    .map(|l| assemble_space(layers, &patch, seq.spec(l), None))
                    .collect::<Result<Vec<_>>>()?;
                let ranks: Vec<usize> = spaces[..3].iter().map(|s| exact_rank(&s.diff)).collect();
                let constants = if seq == Sequence::Plain { 1 } else { 0 };
                if exact_nullity(&spaces[0].diff) != constants {
                    bad += 1;
                }
                for l in 1..3 {
                    if exact_nullity(&spaces[l].diff) != ranks[l - 1] {
                        bad += 1;
                    }
                }
                let top = spaces[3].dim() - if seq == Sequence::Plain { 0 } else { 1 };
                if ranks[2] != top {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(CheckRecord::new(
        "exactness.audit",
        "local sequences on extended stars are exact (both sequences)",
        mismatches as f64,
        0.0,
    ))
}

/// Largest `|⟨Z(σ), W_σ'⟩ − δ|` over σ' of the patch cells, skipping the
/// rows and columns for which `skip` holds.
pub fn weight_duality_defect(layers: &MeshLayers, ws: &WeightSet, l: usize, skip: &(dyn Fn(usize) -> bool + Sync)) -> Result<f64> {
    let out = ws.levels[l]
        .par_iter()
        .filter(|w| !skip(w.id))
        .map(|w| -> Result<f64> {
            let fine: Vec<usize> = w.patch_cells.iter().flat_map(|&t| layers.alfeld.children(t)).collect();
            let mut cols: Vec<usize> = w
                .patch_cells
                .iter()
                .flat_map(|&t| layers.base.cell_subsimplices(l, t)[..num_local(l)].to_vec())
                .filter(|&s| !skip(s))
                .collect();
            cols.sort_unstable();
            cols.dedup();
            if w.field.dofs.is_empty() {
                return Ok(if cols.contains(&w.id) { 1.0 } else { 0.0 });
            }
            let p = pair_matrix(layers, (Layer::Alfeld, &fine), (Layer::Alfeld, 3 - l, &w.field.dofs), (Layer::Base, l, &cols))?;
            let z = na::DVector::from_column_slice(&w.field.coeffs);
            let row = p.transpose() * z;
            Ok(cols
                .iter()
                .enumerate()
                .map(|(k, &s)| (row[k] - if s == w.id { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(out.into_iter().fold(0.0, f64::max))
}

/// Largest relative coefficient defect of `d Z(σ) = s_l Σ ι Z(lower)`.
pub fn weight_relation_defect(layers: &MeshLayers, ws: &WeightSet, l: usize) -> f64 {
    let sign = [0.0, -1.0, 1.0, -1.0][l];
    let d = layers.alfeld_incidence.of_degree(3 - l);
    let n_next = layers.alfeld.complex.count(4 - l);
    ws.levels[l]
        .par_iter()
        .map(|w| {
            let mut lhs = vec![0.0; n_next];
            for (row, entries) in d.rows.iter().enumerate() {
                for &(col, sgn) in entries {
                    lhs[row] += sgn as f64 * w.field.coeff(col);
                }
            }
            let mut rhs = vec![0.0; n_next];
            for &(s, iota) in &layers.base_incidence.of_degree(l - 1).rows[w.id] {
                let z = &ws.levels[l - 1][s].field;
                for (&dof, &c) in z.dofs.iter().zip(&z.coeffs) {
                    rhs[dof] += sign * iota as f64 * c;
                }
            }
            let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale))
        })
        .reduce(|| 0.0, f64::max)
}

/// Count of weight coefficients outside the split cells of the extended
/// star, plus weights whose stored patch differs from the extended star.
pub fn weight_support_violations(layers: &MeshLayers, ws: &WeightSet) -> Result<usize> {
    let base = &layers.base;
    let fine = &layers.alfeld.complex;
    let mut bad = 0;
    for l in 0..4 {
        for w in &ws.levels[l] {
            let es = extended_star(base, &base.simplex(l, w.id))?;
            if es.cells != w.patch_cells {
                bad += 1;
            }
            let mut allowed: Vec<usize> = w
                .patch_cells
                .iter()
                .flat_map(|&t| layers.alfeld.children(t))
                .flat_map(|c| fine.cell_subsimplices(3 - l, c)[..num_local(3 - l)].to_vec())
                .collect();
            allowed.sort_unstable();
            allowed.dedup();
            bad += w
                .field
                .dofs
                .iter()
                .zip(&w.field.coeffs)
                .filter(|(d, c)| **c != 0.0 && allowed.binary_search(d).is_err())
                .count();
        }
    }
    Ok(bad)
}

fn dg0_integral(layers: &MeshLayers, f: &PiecewiseField) -> f64 {
    f.dofs.iter().zip(&f.coeffs).map(|(&c, &a)| layers.alfeld.complex.orientation(c) * a).sum()
}

/// Duality, differential relations, unit integral of vertex weights and
/// support containment.
pub fn weight_checks(layers: &MeshLayers, ws: &WeightSet, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let mut duality: f64 = 0.0;
    for l in 0..4 {
        duality = duality.max(weight_duality_defect(layers, ws, l, &|_| false)?);
    }
    let relations = (1..4).map(|l| weight_relation_defect(layers, ws, l)).fold(0.0, f64::max);
    let integral = ws.levels[0]
        .iter()
        .map(|w| (dg0_integral(layers, &w.field) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        CheckRecord::new("weights.duality", "weights reproduce the canonical DOFs on the global basis", duality, tol.quad),
        CheckRecord::new("weights.relations", "d Z equals the signed incidence sum of lower weights", relations, tol.coeff),
        CheckRecord::new("weights.vertex_integral", "vertex weights integrate to one", integral, tol.coeff),
        CheckRecord::new(
            "weights.support",
            "weights vanish outside the split extended star",
            weight_support_violations(layers, ws)? as f64,
            0.0,
        ),
    ])
}

/// Largest `|M − I|` of the projection matrix against the base basis:
/// column σ' holds the coefficients of `Π W_σ'`.
pub fn idempotence_defect(op: &ProjectionOperator) -> f64 {
    let m = op.matrix();
    let mut worst: f64 = 0.0;
    for (i, row) in m.rows.iter().enumerate() {
        if op.is_omitted(i) {
            continue;
        }
        let mut diag = 0.0;
        for &(j, v) in row {
            if j == i {
                diag = v;
            } else if !op.is_omitted(j) {
                worst = worst.max(v.abs());
            }
        }
        worst = worst.max((diag - 1.0).abs());
    }
    worst
}

/// Cubic fields of form degree `l` with their derivatives.
pub fn cubic_field(l: usize) -> (PointField, PointField) {
    match l {
        0 => (
            PointField::scalar(0, 3, |x| x.x * x.x * x.y - 2.0 * x.y * x.z * x.z + x.z),
            PointField::new(1, 2, |x| Point::new(2.0 * x.x * x.y, x.x * x.x - 2.0 * x.z * x.z, 1.0 - 4.0 * x.y * x.z)),
        ),
        1 => (
            PointField::new(1, 3, |x| Point::new(x.y * x.y * x.z, x.x.powi(3), x.x * x.z)),
            PointField::new(2, 2, |x| Point::new(0.0, x.y * x.y - x.z, 3.0 * x.x * x.x - 2.0 * x.y * x.z)),
        ),
        _ => (
            PointField::new(2, 3, |x| Point::new(x.x * x.x * x.y, x.y * x.z * x.z, x.x * x.y * x.z)),
            PointField::scalar(3, 2, |x| 3.0 * x.x * x.y + x.z * x.z),
        ),
    }
}

fn random_base_field(layers: &MeshLayers, l: usize, seed: u64, keep: impl Fn(usize) -> bool) -> PiecewiseField {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..layers.base.count(l))
        .map(|s| {
            let v = r.gen::<f64>() * 2.0 - 1.0;
            if keep(s) {
                v
            } else {
                0.0
            }
        })
        .collect();
    PiecewiseField::dense(Layer::Base, l, coeffs)
}

/// Idempotence on every basis field and commutation on discrete inputs
/// (vanishing on constrained simplices) and, for the plain weights, on
/// polynomial inputs up to degree 3. With constrained faces, commutation
/// needs inputs with zero trace there, which generic polynomials lack.
pub fn projection_checks(layers: &MeshLayers, ws: &WeightSet, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let constrained = matches!(&ws.mode, WeightMode::Gamma { faces } if !faces.is_empty());
    let ops = (0..4)
        .map(|l| ProjectionOperator::new(layers, ws, l))
        .collect::<Result<Vec<_>>>()?;
    let idem = ops.iter().map(idempotence_defect).fold(0.0, f64::max);
    let mut discrete: f64 = 0.0;
    let mut poly: f64 = 0.0;
    for l in 0..3 {
        let keep = |s: usize| !ops[l].is_omitted(s);
        let u = random_base_field(layers, l, 1000 + l as u64, keep);
        let du = derivative(layers, &u);
        discrete = discrete.max(commutation_residual(&ops[l], &ops[l + 1], &InputField::Discrete(u), &InputField::Discrete(du))?);
        if constrained {
            continue;
        }
        let (u, du) = cubic_field(l);
        poly = poly.max(commutation_residual(&ops[l], &ops[l + 1], &InputField::Callback(u), &InputField::Callback(du))?);
    }
    let mut out = vec![
        CheckRecord::new("projections.idempotence", "projections fix every basis field", idem, tol.coeff),
        CheckRecord::new("projections.commutation_discrete", "d Π u = Π d u for discrete u", discrete, tol.exact),
    ];
    if constrained {
        return Ok(out);
    }
    let lin = commutation_residual(
        &ops[0],
        &ops[1],
        &InputField::Callback(PointField::scalar(0, 1, |x| x.x)),
        &InputField::Callback(PointField::new(1, 0, |_| Point::new(1.0, 0.0, 0.0))),
    )?;
    out.push(CheckRecord::new(
        "projections.commutation_polynomial",
        "d Π u = Π d u for polynomial u of degree at most 3",
        poly.max(lin),
        tol.quad,
    ));
    Ok(out)
}

/// Largest stability constant per form degree with probes of degree `q`.
pub fn max_stability(layers: &MeshLayers, ws: &WeightSet, q: usize) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (l, slot) in out.iter_mut().enumerate() {
        let op = ProjectionOperator::new(layers, ws, l)?;
        *slot = stability_constants(&op, q)?.iter().fold(0.0f64, |m, c| m.max(c.constant));
    }
    Ok(out)
}

/// Boundary-mode checks for one partition: zero weights on constrained
/// simplices, duality against the constrained basis, relations, traces of
/// projected fields on Γ and agreement of unaffected weights with the
/// plain ones.
pub fn gamma_checks(
    layers: &MeshLayers,
    partition: &GammaPartition,
    plain: &WeightSet,
    gamma: &WeightSet,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let mut nullity_bad = 0usize;
    let mut interior_diff: f64 = 0.0;
    for l in 0..4 {
        for (w, p) in gamma.levels[l].iter().zip(&plain.levels[l]) {
            match w.class {
                SimplexClass::Boundary => {
                    if w.field.coeffs.iter().any(|&c| c != 0.0) {
                        nullity_bad += 1;
                    }
                }
                SimplexClass::Interior => {
                    if w.field.dofs != p.field.dofs {
                        interior_diff = f64::INFINITY;
                    } else {
                        let d = w.field.coeffs.iter().zip(&p.field.coeffs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                        interior_diff = interior_diff.max(d);
                    }
                }
                SimplexClass::Interface => {}
            }
        }
    }
    let mut duality: f64 = 0.0;
    for l in 0..4 {
        let skip = |s: usize| partition.class(l, s) == SimplexClass::Boundary;
        duality = duality.max(weight_duality_defect(layers, gamma, l, &skip)?);
    }
    let relations = (1..4).map(|l| weight_relation_defect(layers, gamma, l)).fold(0.0, f64::max);

    let mut trace: f64 = 0.0;
    let mut zero_coeffs = 0usize;
    for l in 0..3 {
        let op = ProjectionOperator::new(layers, gamma, l)?;
        let (u, _) = cubic_field(l);
        let p = project(&op, &InputField::Callback(u))?;
        trace = trace.max(max_trace_on_faces(layers, &p, &partition.gamma_faces));
        zero_coeffs += (0..layers.base.count(l))
            .filter(|&s| partition.class(l, s) == SimplexClass::Boundary && p.coeffs[s] != 0.0)
            .count();
    }
    let mut out = vec![
        CheckRecord::new("gamma.nullity", "weights of constrained simplices are zero", (nullity_bad + zero_coeffs) as f64, 0.0),
        CheckRecord::new("gamma.duality", "weights reproduce the DOFs on the constrained basis", duality, tol.quad),
        CheckRecord::new("gamma.relations", "d Z equals the signed incidence sum of lower weights", relations, tol.coeff),
        CheckRecord::new("gamma.trace", "projected fields have zero trace on the constrained faces", trace, tol.exact),
        CheckRecord::new("gamma.interior_unchanged", "weights away from the constrained faces equal the plain ones", interior_diff, 0.0),
    ];
    out.extend(projection_checks(layers, gamma, tol)?.into_iter().map(|mut r| {
        r.id = r.id.replacen("projections.", "gamma.projections.", 1);
        r
    }));
    Ok(out)
}

/// Positivity and eigenpair residuals over a Poincaré sweep.
pub fn poincare_checks(rows: &[PoincareResult], tol: &Tolerances) -> Vec<CheckRecord> {
    let nonpositive = rows.iter().filter(|r| !(r.lambda_min > 0.0 && r.constant.is_finite())).count();
    let residual = rows.iter().fold(0.0f64, |m, r| m.max(r.residual));
    vec![
        CheckRecord::new("poincare.positive", "smallest eigenvalue on the kernel complement is positive", nonpositive as f64, 0.0),
        CheckRecord::new("poincare.residual", "computed eigenpairs solve the pencil", residual, tol.coeff),
    ]
}

/// Gradient Poincaré constant of the reference tetrahedron against a
/// closed-form P1 assembly on mean-free coefficient vectors.
pub fn single_tet_oracle(tol: &Tolerances) -> Result<CheckRecord> {
    let layers = MeshLayers::new(reference_tet())?;
    let patch = extended_star(&layers.base, &layers.base.simplex(0, 0))?;
    let r = patch_poincare(&layers, &patch, Sequence::Plain, 0)?;
    let vol = 1.0 / 6.0;
    let grads = [
        Point::new(-1.0, -1.0, -1.0),
        Point::new(1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
    ];
    let k = na::Matrix4::from_fn(|i, j| vol * grads[i].dot(&grads[j]));
    let m = na::Matrix4::from_fn(|i, j| vol / 20.0 * if i == j { 2.0 } else { 1.0 });
    let q = na::Matrix4x3::from_fn(|i, j| if i == j + 1 { 1.0 } else if i == 0 { -1.0 } else { 0.0 });
    let mq = q.transpose() * m * q;
    let linv = na::Cholesky::new(mq).expect("mass is SPD").l().try_inverse().expect("invertible factor");
    let lambda = na::SymmetricEigen::new(linv * (q.transpose() * k * q) * linv.transpose()).eigenvalues.min();
    let oracle = 1.0 / (2f64.sqrt() * lambda.sqrt());
    Ok(CheckRecord::new(
        "poincare.single_tet",
        "gradient constant on one tetrahedron matches a dense oracle",
        (r.constant - oracle).abs() / oracle,
        tol.coeff,
    ))
}

fn random_jacobian(r: &mut impl Rng) -> na::Matrix3<f64> {
    loop {
        let j = na::Matrix3::from_fn(|_, _| r.gen::<f64>() * 2.0 - 1.0) + na::Matrix3::identity() * 0.8;
        let det = j.determinant();
        if det.abs() >= 0.2 {
            return if det > 0.0 { j } else { -j };
        }
    }
}

fn random_affine_field(r: &mut impl Rng, l: usize) -> AffineField {
    let mut value = Point::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5);
    let mut slope = na::Matrix3::from_fn(|_, _| r.gen::<f64>() - 0.5);
    if l == 0 || l == 3 {
        value.y = 0.0;
        value.z = 0.0;
        let row = slope.row(0).into_owned();
        slope = na::Matrix3::zeros();
        if l == 0 {
            slope.set_row(0, &row);
        }
    }
    AffineField {
        form_degree: l,
        value,
        slope,
    }
}

/// Commuting property, weighted identity and round trips of the Piola maps
/// on `count` random affine maps, plus rigid-motion invariance of Poincaré
/// constants on a jittered patch.
pub fn piola_checks(count: usize, seed: u64, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut commute: f64 = 0.0;
    let mut weighted: f64 = 0.0;
    let mut round: f64 = 0.0;
    for _ in 0..count {
        let j = random_jacobian(&mut r);
        let b = Point::new(r.gen(), r.gen(), r.gen());
        let map = AffineCellMap::global(reference_tet(), j, b)?;
        for l in 0..4 {
            let u = random_affine_field(&mut r, l);
            if l < 3 {
                commute = commute.max(piola_commutation_residual(&map, 0, &u)?);
            }
            let back = piola_inverse(&map, 0, &piola(&map, 0, &u)?)?;
            let scale = u.value.amax().max(u.slope.amax()).max(1.0);
            round = round.max((back.value - u.value).amax().max((back.slope - u.slope).amax()) / scale);
        }
        for l in 1..3 {
            let n = map.physical.count(l);
            let mut field = || PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() - 0.5).collect());
            let (u, v) = (field(), field());
            weighted = weighted.max(piola_weighted_identity_check(&map, &u, &v, l)?);
        }
    }

    // rigid motion of a jittered two-level cube
    let mesh = crate::meshkit::gen_cube_mesh(2);
    let verts: Vec<Point> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let mut q = *p;
            for k in 0..3 {
                if p[k] > 1e-12 && p[k] < 1.0 - 1e-12 {
                    q[k] += 0.1 * (r.gen::<f64>() - 0.5);
                }
            }
            q
        })
        .collect();
    let mesh = crate::meshkit::build_complex(verts, mesh.cells())?;
    let axis = na::Unit::new_normalize(Point::new(r.gen::<f64>() + 0.1, r.gen(), r.gen()));
    let rot = na::Rotation3::from_axis_angle(&axis, r.gen::<f64>() * 6.0);
    let shift = Point::new(r.gen(), r.gen(), r.gen()) * 5.0;
    let moved = crate::meshkit::build_complex(mesh.vertices().iter().map(|x| rot * x + shift).collect(), mesh.cells())?;
    let a = MeshLayers::new(mesh)?;
    let b = MeshLayers::new(moved)?;
    let mut rigid: f64 = 0.0;
    for (dim, id) in [(0, 13), (0, 0), (1, 10), (2, 40), (3, 20)] {
        for seq in [Sequence::Plain, Sequence::Mathring] {
            for l in 0..3 {
                let pa = patch_poincare(&a, &extended_star(&a.base, &a.base.simplex(dim, id))?, seq, l)?;
                let pb = patch_poincare(&b, &extended_star(&b.base, &b.base.simplex(dim, id))?, seq, l)?;
                rigid = rigid.max((pa.constant - pb.constant).abs() / pa.constant);
            }
        }
    }
    Ok(vec![
        CheckRecord::new("piola.commuting", "d ψ^l = ψ^{l+1} d on random affine maps", commute, tol.coeff),
        CheckRecord::new("piola.weighted_identity", "⟨u, v⟩ = ⟨ϱ ψ u, ψ v⟩ on random affine maps", weighted, tol.coeff),
        CheckRecord::new("piola.round_trip", "inverse Piola map undoes the Piola map", round, tol.exact),
        CheckRecord::new("piola.rigid_invariance", "Poincaré constants are invariant under rigid motions", rigid, tol.quad),
    ])
}

/// One record per column of `per_level` (rows are refinement levels,
/// coarse first): the largest level-to-level growth of that column.
pub fn plateau_checks(id: &str, property: &str, per_level: &[Vec<f64>], tol: &Tolerances) -> Vec<CheckRecord> {
    let columns = per_level.first().map_or(0, |v| v.len());
    (0..columns)
        .map(|k| {
            let series: Vec<f64> = per_level.iter().map(|v| v[k]).collect();
            CheckRecord::new(format!("{id}[{k}]"), property, plateau_ratio(&series), tol.plateau)
        })
        .collect()
}

/// Number of weight coefficients and projection coefficients that differ
/// in any bit between the plain weights and those of an empty constrained
/// part, plus one if the text bundles differ.
pub fn empty_gamma_check(layers: &MeshLayers, plain: &WeightSet) -> Result<CheckRecord> {
    let partition = crate::meshkit::classify_gamma(&layers.base, &[], Default::default())?;
    let gamma = crate::weights::weight_set_gamma(layers, &partition)?;
    let mut differences = usize::from(plain.to_bundle() != gamma.to_bundle());
    for (x, y) in plain.levels.iter().zip(&gamma.levels) {
        for (u, v) in x.iter().zip(y) {
            if u.field.dofs != v.field.dofs {
                differences += 1;
            } else {
                differences += u.field.coeffs.iter().zip(&v.field.coeffs).filter(|(p, q)| p.to_bits() != q.to_bits()).count();
            }
        }
    }
    for l in 0..4 {
        let u = InputField::Callback(if l < 3 { cubic_field(l).0 } else { cubic_field(2).1 });
        let a = project(&ProjectionOperator::new(layers, plain, l)?, &u)?;
        let b = project(&ProjectionOperator::new(layers, &gamma, l)?, &u)?;
        differences += a.coeffs.iter().zip(&b.coeffs).filter(|(p, q)| p.to_bits() != q.to_bits()).count();
    }
    Ok(CheckRecord::new(
        "gamma.empty_is_plain",
        "an empty constrained part gives the plain weights and projections bit for bit",
        differences as f64,
        0.0,
    ))
}
