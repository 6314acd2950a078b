mod common;

use localproj::femspaces::*;
use localproj::meshkit::*;
use localproj::projections::*;
use localproj::weights::*;
use localproj::{Error, Point};
use proptest::prelude::*;
use rand::Rng;

fn setup(mesh: SimplicialComplex) -> (MeshLayers, WeightSet) {
    let layers = MeshLayers::new(mesh).unwrap();
    let ws = weight_set(&layers).unwrap();
    (layers, ws)
}

fn basis(l: usize, id: usize) -> InputField {
    InputField::Discrete(PiecewiseField::from_pairs(Layer::Base, l, vec![(id, 1.0)]))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn random_field(layers: &MeshLayers, l: usize, seed: u64) -> PiecewiseField {
    let mut r = common::rng(seed);
    let n = layers.base.count(l);
    PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect())
}

/// Cubic test fields and their derivatives, by form degree.
fn cubic(l: usize) -> (PointField, PointField) {
    match l {
        0 => (
            PointField::scalar(0, 3, |x| x.x * x.x * x.y - 2.0 * x.y * x.z * x.z + x.z),
            PointField::new(1, 2, |x| {
                Point::new(2.0 * x.x * x.y, x.x * x.x - 2.0 * x.z * x.z, -4.0 * x.y * x.z + 1.0)
            }),
        ),
        1 => (
            // u = (y²z, x³, xz), curl u = (0, y² - z, 3x² - 2yz)
            PointField::new(1, 3, |x| Point::new(x.y * x.y * x.z, x.x.powi(3), x.x * x.z)),
            PointField::new(2, 2, |x| Point::new(0.0, x.y * x.y - x.z, 3.0 * x.x * x.x - 2.0 * x.y * x.z)),
        ),
        _ => (
            // u = (x²y, yz², xyz), div u = 2xy + z² + xy
            PointField::new(2, 3, |x| Point::new(x.x * x.x * x.y, x.y * x.z * x.z, x.x * x.y * x.z)),
            PointField::scalar(3, 2, |x| 3.0 * x.x * x.y + x.z * x.z),
        ),
    }
}

#[test]
fn operator_matrix_is_the_identity() {
    for mesh in [gen_cube_mesh(1), common::jittered_cube(2, 0.3, 3)] {
        let (layers, ws) = setup(mesh);
        for l in 0..4 {
            let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
            let m = op.matrix();
            let mut worst: f64 = 0.0;
            for (i, row) in m.rows.iter().enumerate() {
                assert!(row.iter().any(|&(j, _)| j == i), "diagonal entry missing at l={l} row {i}");
                for &(j, v) in row {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((v - expect).abs());
                }
            }
            assert!(worst <= 1e-10, "l={l}: matrix defect {worst:e}");
        }
    }
}

#[test]
fn basis_fields_are_reproduced() {
    let (layers, ws) = setup(common::jittered_cube(2, 0.3, 11));
    for l in 0..4 {
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let n = layers.base.count(l);
        for id in (0..n).step_by(7) {
            let p = project(&op, &basis(l, id)).unwrap();
            let mut e = vec![0.0; n];
            e[id] = 1.0;
            let d = max_diff(&p.coeffs, &e);
            assert!(d <= 1e-10, "l={l} id={id}: {d:e}");
        }
    }
}

#[test]
fn constants_and_random_fields_are_fixed() {
    let (layers, ws) = setup(gen_cube_mesh(2));
    let op0 = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let one = project(&op0, &InputField::Callback(PointField::scalar(0, 0, |_| 1.0))).unwrap();
    assert!(one.coeffs.iter().all(|c| (c - 1.0).abs() <= 1e-12));

    for l in 0..4 {
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let u = random_field(&layers, l, 40 + l as u64);
        let p = project(&op, &InputField::Discrete(u.clone())).unwrap();
        let d = max_diff(&p.coeffs, &u.coeffs);
        assert!(d <= 1e-10, "l={l}: {d:e}");
    }
}

#[test]
fn linear_input_gives_its_interpolant() {
    let (layers, ws) = setup(common::jittered_cube(2, 0.3, 5));
    let op = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let p = project(&op, &InputField::Callback(PointField::scalar(0, 1, |x| x.x))).unwrap();
    for v in 0..layers.base.num_vertices() {
        assert!((p.coeffs[v] - layers.base.vertex(v).x).abs() <= 1e-10);
    }
}

#[test]
fn commutation_on_discrete_inputs() {
    let (layers, ws) = setup(common::jittered_cube(2, 0.3, 8));
    for l in 0..3 {
        let lower = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let upper = ProjectionOperator::new(&layers, &ws, l + 1).unwrap();
        let u = random_field(&layers, l, 70 + l as u64);
        let du = derivative(&layers, &u);
        let r = commutation_residual(&lower, &upper, &InputField::Discrete(u), &InputField::Discrete(du)).unwrap();
        assert!(r <= 1e-12, "l={l}: {r:e}");
    }
}

#[test]
fn commutation_on_polynomials() {
    let (layers, ws) = setup(common::jittered_cube(2, 0.3, 9));
    let op0 = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let op1 = ProjectionOperator::new(&layers, &ws, 1).unwrap();
    let r = commutation_residual(
        &op0,
        &op1,
        &InputField::Callback(PointField::scalar(0, 1, |x| x.x)),
        &InputField::Callback(PointField::new(1, 0, |_| Point::new(1.0, 0.0, 0.0))),
    )
    .unwrap();
    assert!(r <= 1e-10, "x1: {r:e}");
    for l in 0..3 {
        let lower = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let upper = ProjectionOperator::new(&layers, &ws, l + 1).unwrap();
        let (u, du) = cubic(l);
        let r = commutation_residual(&lower, &upper, &InputField::Callback(u), &InputField::Callback(du)).unwrap();
        assert!(r <= 1e-9, "l={l}: {r:e}");
    }
}

#[test]
fn coefficients_ignore_fields_outside_the_extended_star() {
    let (layers, ws) = setup(gen_cube_mesh(2));
    for l in 0..4 {
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        // basis field of the simplex farthest from the origin
        let n = layers.base.count(l);
        let far = (0..n)
            .max_by(|&a, &b| {
                let c = |s: usize| -> f64 {
                    layers.base.simplex_vertices(l, s).iter().map(|&v| layers.base.vertex(v).norm()).sum::<f64>()
                };
                c(a).partial_cmp(&c(b)).unwrap()
            })
            .unwrap();
        let support: Vec<usize> = (0..layers.base.num_cells())
            .filter(|&t| layers.base.cell_subsimplices(l, t).contains(&far))
            .collect();
        let u = basis(l, far);
        let mut checked = 0;
        for sigma in 0..n {
            let es = &ws.weight(l, sigma).patch_cells;
            if es.iter().any(|t| support.contains(t)) {
                continue;
            }
            assert_eq!(op.pairing(sigma, &u).unwrap(), 0.0);
            checked += 1;
        }
        assert!(checked > 0);
    }
}

#[test]
fn constant_input_stability_ratio() {
    let (layers, ws) = setup(gen_cube_mesh(2));
    let op = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let one = project(&op, &InputField::Callback(PointField::scalar(0, 0, |_| 1.0))).unwrap();
    for t in 0..layers.base.num_cells() {
        let g = &layers.base_geometry[t];
        let mut out = 0.0;
        for (p, w) in layers.rule.unit_weights() {
            out += w * g.volume * one.eval_with(&layers.base, t, g, p).x.powi(2);
        }
        let es = &ws.weight(3, t).patch_cells;
        let es_vol: f64 = es.iter().map(|&c| layers.base.volume(c)).sum();
        let ratio = (out / es_vol).sqrt();
        let expect = (layers.base.volume(t) / es_vol).sqrt();
        assert!((ratio - expect).abs() <= 1e-12);
        assert!(ratio <= 1.0);
        // constants are among the probes, so the certified sup dominates
        let c = local_stability_constant(&op, t, 0).unwrap().constant;
        assert!(c >= ratio * (1.0 - 1e-12));
    }
}

/// Piecewise constant scalar on the base cells of `cells`, evaluated by point
/// location (quadrature points are interior, so the lookup is unambiguous).
fn piecewise_constant(layers: &MeshLayers, cells: &[usize], values: &[f64]) -> PointField {
    let geo: Vec<(CellGeometry, f64)> =
        cells.iter().zip(values).map(|(&t, &v)| (layers.base_geometry[t].clone(), v)).collect();
    PointField::scalar(0, 0, move |x| {
        for (g, v) in &geo {
            if g.barycentric(x).iter().all(|&b| b > -1e-12) {
                return *v;
            }
        }
        0.0
    })
}

#[test]
fn stability_constant_bounds_random_probes() {
    let (layers, ws) = setup(gen_cube_mesh(1));
    let op = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let mut r = common::rng(123);
    for t in 0..layers.base.num_cells() {
        let c = local_stability_constant(&op, t, 0).unwrap();
        assert_eq!(c.probe_dim, ws.weight(3, t).patch_cells.len());
        let es = ws.weight(3, t).patch_cells.clone();
        let mut best: f64 = 0.0;
        for _ in 0..30 {
            let vals: Vec<f64> = es.iter().map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
            let u = InputField::Callback(piecewise_constant(&layers, &es, &vals));
            let p = project(&op, &u).unwrap();
            let g = &layers.base_geometry[t];
            let mut out = 0.0;
            for (q, w) in layers.rule.unit_weights() {
                out += w * g.volume * p.eval_with(&layers.base, t, g, q).x.powi(2);
            }
            let inp: f64 = es.iter().zip(&vals).map(|(&s, v)| layers.base.volume(s) * v * v).sum();
            best = best.max((out / inp).sqrt());
        }
        assert!(best <= c.constant * (1.0 + 1e-10), "cell {t}: probe {best} > {}", c.constant);
        assert!(best >= 0.3 * c.constant, "cell {t}: probes far below sup");
    }
}

#[test]
fn stability_constants_grow_with_probe_degree() {
    let (layers, ws) = setup(gen_cube_mesh(1));
    for l in 0..4 {
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let mut prev = vec![0.0; layers.base.num_cells()];
        for q in 0..=MAX_PROBE_DEGREE {
            let cs = stability_constants(&op, q).unwrap();
            for (c, p) in cs.iter().zip(&prev) {
                assert!(c.constant.is_finite() && c.constant > 0.0);
                assert!(c.constant >= p * (1.0 - 1e-10));
            }
            prev = cs.iter().map(|c| c.constant).collect();
        }
        assert!(matches!(
            local_stability_constant(&op, 0, MAX_PROBE_DEGREE + 1),
            Err(Error::QuadratureUnderResolved { .. })
        ));
    }
}

#[test]
fn gamma_projection_properties() {
    let mesh = gen_cube_mesh(1);
    let faces = boundary_faces_on_plane(&mesh, 0, 0.0);
    let layers = MeshLayers::new(mesh).unwrap();
    let partition = classify_gamma(&layers.base, &faces, GammaOptions::default()).unwrap();
    let ws = weight_set_gamma(&layers, &partition).unwrap();
    let mut r = common::rng(9);
    for l in 0..4 {
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        // trace on Γ vanishes for an arbitrary input
        let (u, _) = if l < 3 { cubic(l) } else { cubic(2) };
        let u = if l < 3 { u } else { PointField::scalar(3, 3, |x| x.x * x.y * x.z + 1.0) };
        let p = project_gamma(&op, &InputField::Callback(u)).unwrap();
        assert!(max_trace_on_faces(&layers, &p, &faces) <= 1e-12, "l={l}");
        for s in 0..layers.base.count(l) {
            if partition.class(l, s) == SimplexClass::Boundary {
                assert_eq!(p.coeffs[s], 0.0);
            }
        }
        // fields of the constrained space are fixed
        let v: Vec<f64> = (0..layers.base.count(l))
            .map(|s| if partition.class(l, s) == SimplexClass::Boundary { 0.0 } else { r.gen::<f64>() - 0.5 })
            .collect();
        let v = PiecewiseField::dense(Layer::Base, l, v);
        let p = project_gamma(&op, &InputField::Discrete(v.clone())).unwrap();
        assert!(max_diff(&p.coeffs, &v.coeffs) <= 1e-10, "l={l}");
    }
    // commutation with a field vanishing on Γ: u = x·y (zero on x = 0)
    let op0 = ProjectionOperator::new(&layers, &ws, 0).unwrap();
    let op1 = ProjectionOperator::new(&layers, &ws, 1).unwrap();
    let rres = commutation_residual(
        &op0,
        &op1,
        &InputField::Callback(PointField::scalar(0, 2, |x| x.x * x.y)),
        &InputField::Callback(PointField::new(1, 1, |x| Point::new(x.y, x.x, 0.0))),
    )
    .unwrap();
    assert!(rres <= 1e-9, "{rres:e}");
}

#[test]
fn empty_gamma_matches_plain_projection() {
    let (layers, plain) = setup(gen_cube_mesh(2));
    let partition = classify_gamma(&layers.base, &[], GammaOptions::default()).unwrap();
    let gw = weight_set_gamma(&layers, &partition).unwrap();
    for l in 0..4 {
        let a = ProjectionOperator::new(&layers, &plain, l).unwrap();
        let b = ProjectionOperator::new(&layers, &gw, l).unwrap();
        let u = InputField::Discrete(random_field(&layers, l, 3));
        assert_eq!(project(&a, &u).unwrap().coeffs, project_gamma(&b, &u).unwrap().coeffs);
    }
    let a = ProjectionOperator::new(&layers, &plain, 0).unwrap();
    assert!(matches!(project_gamma(&a, &basis(0, 0)), Err(Error::LayerMismatch(_))));
}

#[test]
fn input_errors() {
    let (layers, ws) = setup(gen_cube_mesh(1));
    let op = ProjectionOperator::new(&layers, &ws, 1).unwrap();
    assert!(matches!(project(&op, &basis(0, 0)), Err(Error::DegreeMismatch { .. })));
    let rough = InputField::Callback(PointField::new(1, 9, |x| *x));
    assert!(matches!(project(&op, &rough), Err(Error::QuadratureUnderResolved { .. })));
    assert!(matches!(project_high_order(&op, &basis(1, 0), 1), Err(Error::NotSupported(_))));
    assert!(project_high_order(&op, &basis(1, 0), 0).is_ok());
    assert!(ProjectionOperator::new(&layers, &ws, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, l in 0usize..4) {
        let (layers, ws) = setup(gen_cube_mesh(1));
        let op = ProjectionOperator::new(&layers, &ws, l).unwrap();
        let u = random_field(&layers, l, seed);
        let v = random_field(&layers, l, seed + 1);
        let w: Vec<f64> = u.coeffs.iter().zip(&v.coeffs).map(|(x, y)| a * x + y).collect();
        let pw = project(&op, &InputField::Discrete(PiecewiseField::dense(Layer::Base, l, w))).unwrap();
        let pu = project(&op, &InputField::Discrete(u)).unwrap();
        let pv = project(&op, &InputField::Discrete(v)).unwrap();
        let combo: Vec<f64> = pu.coeffs.iter().zip(&pv.coeffs).map(|(x, y)| a * x + y).collect();
        prop_assert!(max_diff(&pw.coeffs, &combo) <= 1e-12);
    }
}
