mod common;

use localproj::femspaces::*;
use localproj::meshkit::*;
use localproj::patchsolve::kernel_basis;
use localproj::poincare::*;
use localproj::{Error, Point};
use nalgebra as na;
use proptest::prelude::*;
use rand::Rng;

fn patch_of(layers: &MeshLayers, dim: usize, id: usize) -> Patch {
    extended_star(&layers.base, &layers.base.simplex(dim, id)).unwrap()
}

fn random_rotation(r: &mut impl Rng) -> na::Matrix3<f64> {
    let axis = na::Unit::new_normalize(common::random_point(r) - Point::new(0.5, 0.5, 0.5));
    na::Rotation3::from_axis_angle(&axis, r.gen::<f64>() * 6.0).into_inner()
}

/// Random Jacobian with positive determinant and bounded condition number.
fn random_jacobian(r: &mut impl Rng) -> na::Matrix3<f64> {
    loop {
        let j = na::Matrix3::from_fn(|_, _| r.gen::<f64>() * 2.0 - 1.0) + na::Matrix3::identity() * 0.8;
        let det = j.determinant();
        if det.abs() < 0.2 {
            continue;
        }
        return if det > 0.0 { j } else { -j };
    }
}

fn moved(mesh: &SimplicialComplex, f: impl Fn(&Point) -> Point) -> SimplicialComplex {
    build_complex(mesh.vertices().iter().map(f).collect(), mesh.cells()).unwrap()
}

#[test]
fn single_tet_gradient_constant_matches_dense_oracle() {
    let layers = MeshLayers::new(reference_tet()).unwrap();
    let r = patch_poincare(&layers, &patch_of(&layers, 0, 0), Sequence::Plain, 0).unwrap();

    // P1 on the reference tet, restricted to coefficient vectors summing to 0
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
    let kq = q.transpose() * k * q;
    let mq = q.transpose() * m * q;
    let l = na::Cholesky::new(mq).unwrap().l();
    let linv = l.try_inverse().unwrap();
    let reduced = linv * kq * linv.transpose();
    let lambda = na::SymmetricEigen::new(reduced).eigenvalues.min();
    let h = 2f64.sqrt();
    let oracle = 1.0 / (h * lambda.sqrt());

    assert!((r.h - h).abs() < 1e-15);
    assert!((r.lambda_min - lambda).abs() <= 1e-10 * lambda);
    assert!((r.constant - oracle).abs() <= 1e-10 * oracle, "{} vs {oracle}", r.constant);
    assert_eq!(r.kernel_dim, 1);
    assert_eq!(r.sigma, Some((0, 0)));
}

#[test]
fn sweep_on_one_cube() {
    let layers = MeshLayers::new(gen_cube_mesh(1)).unwrap();
    let rows = poincare_sweep(&layers).unwrap();
    let simplices: usize = (0..4).map(|d| layers.base.count(d)).sum();
    assert_eq!(rows.len(), simplices * 6);
    for r in &rows {
        assert!(r.lambda_min > 0.0 && r.constant.is_finite());
        assert!(r.residual <= 1e-10, "{r:?}");
        assert!(!r.h_is_patch_diameter);
        match (r.sequence, r.form_degree) {
            (Sequence::Plain, 0) => assert_eq!(r.kernel_dim, 1),
            (Sequence::Mathring, 0) => assert_eq!(r.kernel_dim, 0),
            _ => assert!(r.kernel_dim > 0),
        }
        assert!(r.h_patch >= r.h);
        assert!(r.constant_patch <= r.constant);
    }
    assert_eq!(max_constants(&rows).len(), 6);
}

#[test]
fn constant_is_independent_of_the_kernel_basis() {
    let layers = MeshLayers::new(common::jittered_cube(2, 0.3, 4)).unwrap();
    let mut r = common::rng(2);
    for (dim, id) in [(0, 13), (1, 20), (2, 7)] {
        let patch = patch_of(&layers, dim, id);
        for seq in [Sequence::Plain, Sequence::Mathring] {
            for l in 1..3 {
                let space = assemble_space(&layers, &patch, seq.spec(l), None).unwrap();
                let next = assemble_space(&layers, &patch, seq.spec(l + 1), None).unwrap();
                let prev = assemble_space(&layers, &patch, seq.spec(l - 1), None).unwrap();
                let mut kernel = kernel_basis(&layers, &space, Some(&prev)).unwrap();
                let a = poincare_constant(&space, &next, &kernel, patch.h).unwrap();
                // orthogonal mixing keeps the columns M-orthonormal
                let k = kernel.dim();
                let g = na::DMatrix::from_fn(k, k, |_, _| r.gen::<f64>() - 0.5);
                let qr = g.qr().q();
                kernel.columns = &kernel.columns * qr;
                let b = poincare_constant(&space, &next, &kernel, patch.h).unwrap();
                assert!((a.constant - b.constant).abs() <= 1e-9 * a.constant);
            }
        }
    }
}

#[test]
fn rigid_motions_and_scaling_leave_constants_unchanged() {
    let mesh = common::jittered_cube(2, 0.3, 6);
    let mut r = common::rng(17);
    let rot = random_rotation(&mut r);
    let shift = common::random_point(&mut r) * 3.0;
    let meshes = [
        mesh.clone(),
        moved(&mesh, |x| rot * x + shift),
        moved(&mesh, |x| x * 0.01),
    ];
    let layers: Vec<MeshLayers> = meshes.into_iter().map(|m| MeshLayers::new(m).unwrap()).collect();
    for (dim, id) in [(0, 0), (0, 13), (1, 5), (2, 30), (3, 11)] {
        for seq in [Sequence::Plain, Sequence::Mathring] {
            for l in 0..3 {
                let c: Vec<f64> = layers
                    .iter()
                    .map(|ly| patch_poincare(ly, &patch_of(ly, dim, id), seq, l).unwrap().constant)
                    .collect();
                assert!((c[1] - c[0]).abs() <= 1e-9 * c[0], "rigid {dim} {id} {seq:?} {l}");
                assert!((c[2] - c[0]).abs() <= 1e-9 * c[0], "scaling {dim} {id} {seq:?} {l}");
            }
        }
    }
}

#[test]
fn standalone_patch_uses_its_diameter() {
    let layers = MeshLayers::new(gen_cube_mesh(2)).unwrap();
    let patch = Patch::from_cells(&layers.base, &[0, 1, 2, 3, 4, 5]);
    let r = patch_poincare(&layers, &patch, Sequence::Plain, 1).unwrap();
    assert!(r.h_is_patch_diameter);
    assert_eq!(r.sigma, None);
    assert!((r.h - r.h_patch).abs() < 1e-15);
}

#[test]
fn input_errors() {
    let layers = MeshLayers::new(gen_cube_mesh(1)).unwrap();
    let patch = patch_of(&layers, 0, 0);
    assert!(matches!(
        patch_poincare(&layers, &patch, Sequence::Plain, 3),
        Err(Error::DegreeMismatch { .. })
    ));
    let space = assemble_space(&layers, &patch, Sequence::Plain.spec(0), None).unwrap();
    let wrong = assemble_space(&layers, &patch, Sequence::Mathring.spec(1), None).unwrap();
    let kernel = kernel_basis(&layers, &space, None).unwrap();
    assert!(matches!(
        poincare_constant(&space, &wrong, &kernel, 1.0),
        Err(Error::LayerMismatch(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The constant is the best one: every vector in the kernel complement
    /// has a Rayleigh quotient at least λ_min.
    #[test]
    fn rayleigh_quotients_bound_lambda(seed in 0u64..10_000, l in 0usize..3, mathring in any::<bool>()) {
        let layers = MeshLayers::new(gen_cube_mesh(1)).unwrap();
        let seq = if mathring { Sequence::Mathring } else { Sequence::Plain };
        let patch = patch_of(&layers, 0, 0);
        let space = assemble_space(&layers, &patch, seq.spec(l), None).unwrap();
        let next = assemble_space(&layers, &patch, seq.spec(l + 1), None).unwrap();
        let prev = if l > 0 { Some(assemble_space(&layers, &patch, seq.spec(l - 1), None).unwrap()) } else { None };
        let kernel = kernel_basis(&layers, &space, prev.as_ref()).unwrap();
        let res = poincare_constant(&space, &next, &kernel, patch.h).unwrap();
        let mut r = common::rng(seed);
        let x = na::DVector::from_fn(space.dim(), |_, _| r.gen::<f64>() - 0.5);
        let x = kernel.project_out(&space.mass, &x);
        let b = space.diff_dense();
        let dx = &b * &x;
        let q = dx.dot(&(&next.mass * &dx)) / x.dot(&(&space.mass * &x));
        prop_assert!(q >= res.lambda_min * (1.0 - 1e-9));
    }
}

// Piola layer

fn random_affine(r: &mut impl Rng, l: usize) -> AffineField {
    let value = common::random_point(r) - Point::new(0.5, 0.5, 0.5);
    let slope = na::Matrix3::from_fn(|_, _| r.gen::<f64>() - 0.5);
    match l {
        0 | 3 => {
            let mut s = na::Matrix3::zeros();
            if l == 0 {
                s.set_row(0, &slope.row(0));
            }
            AffineField {
                form_degree: l,
                value: Point::new(value.x, 0.0, 0.0),
                slope: s,
            }
        }
        _ => AffineField {
            form_degree: l,
            value,
            slope,
        },
    }
}

fn one_tet_map(r: &mut impl Rng) -> AffineCellMap {
    let j = random_jacobian(r);
    let b = common::random_point(r);
    AffineCellMap::global(reference_tet(), j, b).unwrap()
}

#[test]
fn piola_commutes_with_derivatives() {
    let mut r = common::rng(100);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let map = one_tet_map(&mut r);
        for l in 0..3 {
            let u = random_affine(&mut r, l);
            worst = worst.max(piola_commutation_residual(&map, 0, &u).unwrap());
        }
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn piola_commutes_on_whitney_fields_via_degrees_of_freedom() {
    // route through canonical DOFs on the reference cell and the reference
    // incidence, against the pulled-back derivative evaluated pointwise
    let mut r = common::rng(101);
    for _ in 0..20 {
        let map = one_tet_map(&mut r);
        for l in 0..3 {
            let n = map.physical.count(l);
            let u = PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() - 0.5).collect());
            let pu = piola(&map, 0, &AffineField::from_cell(&map.physical, 0, &u).unwrap()).unwrap();
            let coeffs: Vec<f64> = (0..n)
                .map(|s| dof_of_fn(&map.reference, l, s, &|x| pu.eval(x), 1).unwrap())
                .collect();
            // DOFs are preserved
            for (a, b) in coeffs.iter().zip(&u.coeffs) {
                assert!((a - b).abs() <= 1e-12);
            }
            let inc = incidence(&map.reference);
            let d = inc.of_degree(l);
            let dref: Vec<f64> =
                d.rows.iter().map(|row| row.iter().map(|&(j, s)| s as f64 * coeffs[j]).sum()).collect();
            let dref = PiecewiseField::dense(Layer::Base, l + 1, dref);
            let du = AffineField::from_cell(&map.physical, 0, &u).unwrap().derivative().unwrap();
            let pdu = piola(&map, 0, &du).unwrap();
            let g = CellGeometry::of_cell(&map.reference, 0);
            for _ in 0..5 {
                let lam = common::random_bary(&mut r);
                let a = dref.eval_with(&map.reference, 0, &g, &lam);
                let b = pdu.eval(&g.point(&lam));
                assert!((a - b).amax() <= 1e-10 * b.amax().max(1.0));
            }
        }
    }
}

#[test]
fn weighted_identity_on_random_maps() {
    let mut r = common::rng(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let map = one_tet_map(&mut r);
        for l in 1..3 {
            let n = map.physical.count(l);
            let mut field = || PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() - 0.5).collect());
            let (u, v) = (field(), field());
            worst = worst.max(piola_weighted_identity_check(&map, &u, &v, l).unwrap());
        }
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn weighted_identity_on_a_piecewise_map() {
    // reference patch and a jittered copy with the same connectivity
    let reference = gen_cube_mesh(2);
    let physical = common::jittered_cube(2, 0.4, 8);
    let map = AffineCellMap::new(reference, physical).unwrap();
    let mut r = common::rng(103);
    for l in 1..3 {
        let n = map.physical.count(l);
        let u = PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() - 0.5).collect());
        let v = PiecewiseField::dense(Layer::Base, l, (0..n).map(|_| r.gen::<f64>() - 0.5).collect());
        assert!(piola_weighted_identity_check(&map, &u, &v, l).unwrap() <= 1e-10);
    }
}

#[test]
fn piola_round_trip() {
    let mut r = common::rng(104);
    for _ in 0..100 {
        let map = one_tet_map(&mut r);
        for l in 0..4 {
            let u = random_affine(&mut r, l);
            let back = piola_inverse(&map, 0, &piola(&map, 0, &u).unwrap()).unwrap();
            let err = (back.value - u.value).amax().max((back.slope - u.slope).amax());
            assert!(err <= 1e-12, "l={l}: {err:e}");
        }
    }
}

#[test]
fn piola_trivial_cases() {
    let id = AffineCellMap::global(reference_tet(), na::Matrix3::identity(), Point::zeros()).unwrap();
    let mut r = common::rng(105);
    for l in 0..4 {
        let u = random_affine(&mut r, l);
        assert_eq!(piola(&id, 0, &u).unwrap(), u);
    }
    let n = id.physical.count(1);
    let u = PiecewiseField::dense(Layer::Base, 1, (0..n).map(|_| r.gen::<f64>()).collect());
    assert!(piola_weighted_identity_check(&id, &u, &u, 1).unwrap() <= 1e-15);

    let map = one_tet_map(&mut r);
    let one = AffineField {
        form_degree: 3,
        value: Point::new(1.0, 0.0, 0.0),
        slope: na::Matrix3::zeros(),
    };
    let p = piola(&map, 0, &one).unwrap();
    assert!((p.value.x - map.det(0)).abs() <= 1e-14);

    let s = 2.5;
    let rho1 = rho(1, &(na::Matrix3::identity() * s)).unwrap();
    for e in na::SymmetricEigen::new(rho1).eigenvalues.iter() {
        assert!((e - s).abs() <= 1e-13);
    }
    let rho2 = rho(2, &(na::Matrix3::identity() * s)).unwrap();
    assert!((rho1 * rho2 - na::Matrix3::identity()).amax() <= 1e-14);
}

#[test]
fn reflections_are_rejected() {
    let flip = na::Matrix3::from_diagonal(&Point::new(-1.0, 1.0, 1.0));
    assert!(matches!(
        AffineCellMap::global(reference_tet(), flip, Point::zeros()),
        Err(Error::OrientationFlip { cell: 0 })
    ));
    assert!(matches!(
        AffineCellMap::new(reference_tet(), gen_cube_mesh(1)),
        Err(Error::LayerMismatch(_))
    ));
}
