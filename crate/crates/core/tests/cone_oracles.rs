use nalgebra::DVector;
use qconic::cones::check::{catalog, compact_basis, dense_hessian, fd_hessian, invariants, random_interior};
use qconic::cones::{Cone, ConeSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn label(s: &ConeSpec) -> String {
    format!("{}{}", s.keyword(), if s.is_complex() { " (complex)" } else { "" })
}

#[test]
fn barrier_identities_hold_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in catalog() {
        let mut cone = spec.build().unwrap();
        for _ in 0..20 {
            let s = random_interior(cone.as_mut(), &mut rng);
            let inv = invariants(cone.as_mut(), &s, &mut rng);
            let name = label(&spec);
            assert!(inv.homogeneity < 1e-8, "{name}: {inv:?}");
            assert!(inv.hess_point < 1e-7, "{name}: {inv:?}");
            assert!(inv.round_trip < 1e-9, "{name}: {inv:?}");
            assert!(inv.fd_grad < 1e-6, "{name}: {inv:?}");
        }
    }
}

#[test]
fn init_points_are_central() {
    for spec in catalog() {
        let mut cone = spec.build().unwrap();
        let (s, z) = cone.init_point();
        assert!(cone.set_point(s.as_slice()));
        let g = cone.grad();
        assert!((&z + &g).norm() <= 1e-12 * g.norm(), "{}", label(&spec));
        if !matches!(spec, ConeSpec::QuantKeyDist { .. }) {
            assert!((&s + &g).norm() <= 1e-7 * s.norm(), "{}: {}", label(&spec), (&s + &g).norm());
        }
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in catalog() {
        let mut cone = spec.build().unwrap();
        for _ in 0..3 {
            let s = random_interior(cone.as_mut(), &mut rng);
            let fd = fd_hessian(cone.as_mut(), &s);
            cone.set_point(s.as_slice());
            let h = dense_hessian(cone.as_mut());
            let err = (&h - &fd).norm() / h.norm();
            assert!(err < 1e-6, "{}: {err:e}", label(&spec));
        }
    }
}

#[test]
fn inverse_hessian_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for spec in catalog() {
        let mut cone = spec.build().unwrap();
        let s = random_interior(cone.as_mut(), &mut rng);
        let fd = fd_hessian(cone.as_mut(), &s);
        cone.set_point(s.as_slice());
        let layout = cone.layout();
        let r = DVector::from_fn(layout.compact_dim(), |i, _| ((i * 7 + 3) % 5) as f64 - 2.0);
        let want = fd.clone().cholesky().expect("finite-difference Hessian is PD").solve(&r);
        let got = layout.to_compact(cone.inv_hess_prod(layout.from_compact(r.as_slice()).as_slice()).unwrap().as_slice());
        let err = (&got - &want).norm() / want.norm();
        assert!(err < 1e-6, "{}: {err:e}", label(&spec));
    }
}

#[test]
fn third_order_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for spec in catalog() {
        let mut cone = spec.build().unwrap();
        let s = random_interior(cone.as_mut(), &mut rng);
        let basis = compact_basis(cone.as_ref());
        let layout = cone.layout();
        let mut ds = DVector::zeros(cone.dim());
        for (k, b) in basis.iter().enumerate() {
            ds += b * (((k * 5 + 1) % 7) as f64 / 7.0 - 0.4);
        }
        ds *= 0.1 * s.norm() / ds.norm();
        cone.set_point(s.as_slice());
        let Some(t) = cone.third_dir(ds.as_slice()) else { continue };
        let h = 1e-4;
        let mut hp = |x: f64| {
            assert!(cone.set_point((&s + &ds * x).as_slice()));
            cone.hess_prod(ds.as_slice())
        };
        let fd = (-hp(2.0 * h) + hp(h) * 8.0 - hp(-h) * 8.0 + hp(-2.0 * h)) / (12.0 * h);
        let (t, fd) = (layout.to_compact(t.as_slice()), layout.to_compact(fd.as_slice()));
        let err = (&t - &fd).norm() / fd.norm().max(1e-12);
        assert!(err < 1e-6, "{}: {err:e}", label(&spec));
    }
}

#[test]
fn symmetric_cones_expose_nt_scaling() {
    for spec in catalog().into_iter().filter(ConeSpec::is_symmetric) {
        let mut cone = spec.build().unwrap();
        assert!(cone.as_symmetric().is_some(), "{}", label(&spec));
    }
    let mut qre: Box<dyn Cone> = ConeSpec::QuantRelEntr { n: 2, complex: false }.build().unwrap();
    assert!(qre.as_symmetric().is_none());
}
