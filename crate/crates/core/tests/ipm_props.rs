use nalgebra::{DMatrix, DVector};
use qconic::cones::{check, ConeSet, ConeSpec, PerspecFunc};
use qconic::ipm::{proximity_invhess_mode, solve, SolStatus, SolverSettings, Stepper};
use qconic::model::{Model, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quiet() -> SolverSettings {
    SolverSettings { verbose: 0, ..Default::default() }
}

fn toy_qre() -> Model {
    let mut c = DVector::zeros(9);
    c[0] = 1.0;
    let mut a = DMatrix::zeros(5, 9);
    for (r, cols) in [vec![1], vec![2, 3], vec![4], vec![5], vec![8]].into_iter().enumerate() {
        for j in cols {
            a[(r, j)] = 1.0;
        }
    }
    let b = DVector::from_vec(vec![2.0, 2.0, 2.0, 1.0, 1.0]);
    Model::new(c, a, b, None, None, vec![ConeSpec::QuantRelEntr { n: 2, complex: false }], 0.0).unwrap()
}

/// min tr T  s.t.  (T, X, Y) in OPE(log), X = [[2, 1], [1, 2]], Y = I, over compact coordinates.
fn ope_tall_g() -> Model {
    let basis = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]];
    let mut g = DMatrix::zeros(12, 9);
    for blk in 0..3 {
        for (i, e) in basis.iter().enumerate() {
            for r in 0..4 {
                g[(blk * 4 + r, blk * 3 + i)] = -e[r];
            }
        }
    }
    let mut c = DVector::zeros(9);
    c[0] = 1.0;
    c[1] = 1.0;
    let mut a = DMatrix::zeros(6, 9);
    for i in 0..6 {
        a[(i, 3 + i)] = 1.0;
    }
    let b = DVector::from_vec(vec![2.0, 2.0, 1.0, 1.0, 1.0, 0.0]);
    let cone = ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Log, complex: false };
    Model::new(c, a, b, Some(g), None, vec![cone], 0.0).unwrap()
}

fn nonsymmetric_specs() -> Vec<ConeSpec> {
    vec![
        ConeSpec::ClassEntr { n: 3 },
        ConeSpec::QuantEntr { n: 2, complex: true },
        ConeSpec::QuantRelEntr { n: 2, complex: false },
        ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![1], complex: false },
        ConeSpec::OpPerspecTr { n: 2, func: PerspecFunc::Power(0.5), complex: false },
        ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Log, complex: true },
    ]
}

#[test]
fn initial_point_is_centered() {
    let mut set = ConeSet::new(&nonsymmetric_specs()).unwrap();
    let (s0, z0) = set.init_point();
    assert!(set.set_point(s0.as_slice()));
    for (i, p) in set.proximity(z0.as_slice(), 1.0).unwrap().into_iter().enumerate() {
        assert!(p < 1e-10, "cone {i}: {p}");
    }
}

#[test]
fn invhess_free_proximity_reduces_for_identity_g() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in nonsymmetric_specs() {
        let mut set = ConeSet::new(std::slice::from_ref(&spec)).unwrap();
        let s = check::random_interior(set.cone(0), &mut rng);
        let z = check::random_interior(set.cone(0), &mut rng);
        assert!(set.set_point(s.as_slice()));
        let standard = set.proximity(z.as_slice(), 0.7).unwrap()[0];
        let g = -DMatrix::<f64>::identity(spec.dim(), spec.dim());
        let modified = proximity_invhess_mode(&mut set, &g, &z, 0.7).unwrap();
        assert!((standard - modified).abs() <= 1e-8 * standard.max(1.0), "{spec:?}: {standard} vs {modified}");
    }
}

#[test]
fn accepted_iterates_stay_in_the_neighborhood() {
    for (model, settings) in [
        (toy_qre(), quiet()),
        (toy_qre(), SolverSettings { toa: false, ir: false, ..quiet() }),
        (ope_tall_g(), SolverSettings { use_invhess: Some(false), ..quiet() }),
    ] {
        let r = solve(&model, &settings);
        assert_eq!(r.sol_status, SolStatus::Optimal);
        assert_eq!(r.stats.stepper, Stepper::Combined);
        assert!(!r.stats.history.is_empty());
        for (k, it) in r.stats.history.iter().enumerate() {
            assert!(it.proximity <= 0.99, "iteration {k}: {}", it.proximity);
        }
    }
}

#[test]
fn scaled_rows_give_the_same_solution() {
    // min x0 + 2 x1 + 4 x2  s.t.  x0 + x1 + x2 = 1,  x0 - x2 = 0.2,  x >= 0
    let c = DVector::from_vec(vec![1.0, 2.0, 4.0]);
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, -1.0]);
    let b = DVector::from_vec(vec![1.0, 0.2]);
    let cones = vec![ConeSpec::NonNegOrthant { n: 3 }];
    let base = Model::new(c.clone(), a.clone(), b.clone(), None, None, cones.clone(), 0.0).unwrap();
    let scaled = Model::new(c, a * 1e6, b * 1e6, None, None, cones, 0.0).unwrap();
    let r0 = solve(&base, &quiet());
    let r1 = solve(&scaled, &quiet());
    assert_eq!(r0.sol_status, SolStatus::Optimal);
    assert_eq!(r1.sol_status, SolStatus::Optimal);
    assert!((&r0.x_opt - &r1.x_opt).amax() < 1e-8, "{} vs {}", r0.x_opt, r1.x_opt);
    assert!((r0.p_obj - r1.p_obj).abs() < 1e-8);
    assert!((r0.p_obj - 1.8).abs() < 1e-7);

    let q = toy_qre();
    let big = Model::new(q.c.clone(), &q.a * 1e6, &q.b * 1e6, None, None, q.cones.clone(), 0.0).unwrap();
    let (r0, r1) = (solve(&q, &quiet()), solve(&big, &quiet()));
    assert!((&r0.x_opt - &r1.x_opt).amax() < 1e-7, "{}", (&r0.x_opt - &r1.x_opt).amax());
}

#[test]
fn init_pnt_is_used_or_rejected() {
    let model = toy_qre();
    let mut set = ConeSet::new(&model.cones).unwrap();
    let (s0, z0) = set.init_point();
    let start = Point { x: -s0.clone(), y: DVector::zeros(5), z: z0.clone(), s: s0.clone() * 1.5, tau: 1.0, kappa: 1.0 };
    let r = solve(&model, &SolverSettings { init_pnt: Some(start), ..quiet() });
    assert_eq!(r.sol_status, SolStatus::Optimal);
    assert!((r.p_obj - 2.772588704578).abs() < 1e-6);
    let outside = Point { x: s0.clone(), y: DVector::zeros(5), z: z0, s: -s0, tau: 1.0, kappa: 1.0 };
    let r2 = solve(&model, &SolverSettings { init_pnt: Some(outside), ..quiet() });
    assert_eq!(r2.sol_status, SolStatus::Optimal);
    assert_eq!(r2.num_iter, solve(&model, &quiet()).num_iter);
}

#[test]
fn invhess_mode_selection() {
    let model = ope_tall_g();
    let auto = solve(&model, &quiet());
    assert!(auto.stats.invhess_avoided);
    let forced = solve(&model, &SolverSettings { use_invhess: Some(true), ..quiet() });
    assert!(!forced.stats.invhess_avoided);
    assert!(forced.stats.inv_hess_calls_after_init > 0);
    assert_eq!(auto.stats.inv_hess_calls_after_init, 0);
    assert!((auto.p_obj - forced.p_obj).abs() < 1e-7);
    // X log X at X = [[2, 1], [1, 2]] has trace 3 log 3
    assert!((auto.p_obj - 3.0 * 3f64.ln()).abs() < 1e-7, "{}", auto.p_obj);
    // G = -I never triggers avoidance
    assert!(!solve(&toy_qre(), &quiet()).stats.invhess_avoided);
}

#[test]
fn symmetric_models_use_nesterov_todd() {
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let m = Model::new(
        DVector::from_vec(vec![1.0, 2.0]),
        a,
        DVector::from_vec(vec![1.0]),
        None,
        None,
        vec![ConeSpec::NonNegOrthant { n: 2 }],
        0.0,
    )
    .unwrap();
    let r = solve(&m, &quiet());
    assert_eq!(r.stats.stepper, Stepper::NesterovTodd);
    assert!((r.p_obj - 1.0).abs() < 1e-8);
}
