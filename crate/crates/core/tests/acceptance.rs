//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qconic::cones::check::{catalog, fd_hessian, invariants, random_interior};
use qconic::cones::{ConeSpec, GInfo, PerspecFunc, ZInfo};
use qconic::io::{read_cbf, read_sdpa, write_cbf, write_sdpa, Format};
use qconic::ipm::{solve, SolStatus, SolveReport, SolverSettings, Stepper};
use qconic::kkt::{assemble_schur_dense, assemble_schur_sparse, SparseSym};
use qconic::model::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn quiet() -> SolverSettings {
    SolverSettings { verbose: 0, ..Default::default() }
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn load(name: &str) -> Model {
    match Format::from_path(name).unwrap() {
        Format::Cbf => read_cbf(&fixture(name)).unwrap(),
        Format::Sdpa { complex } => read_sdpa(&fixture(name), complex).unwrap(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------- generators

fn random_sym(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Hermitian matrix as (real part, imaginary part).
fn random_herm(n: usize, rng: &mut impl Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let im = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (random_sym(n, rng), (&im - im.transpose()) * 0.5)
}

fn random_hpd(n: usize, rng: &mut impl Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let (r, i) = (DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)), DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)));
    // (R + iI)(R + iI)^† = R R^T + I I^T + i (I R^T - R I^T)
    let re = &r * r.transpose() + &i * i.transpose() + DMatrix::identity(n, n) * 0.5;
    let im = &i * r.transpose() - &r * i.transpose();
    (re, im)
}

fn vec_real(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn vec_cplx(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Vec<f64> {
    let n = re.nrows();
    let mut v = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(re[(i, j)]);
            v.push(im[(i, j)]);
        }
    }
    v
}

/// Real representation `[[R, -I], [I, R]]`.
fn lift(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(re);
    m.view_mut((n, n), (n, n)).copy_from(re);
    m.view_mut((0, n), (n, n)).copy_from(&(-im));
    m.view_mut((n, 0), (n, n)).copy_from(im);
    m
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// `min c^T x  s.t.  A x = b, x >= 0`, feasible and bounded by construction.
fn random_lp(rng: &mut impl Rng) -> Model {
    let n = rng.gen_range(2..=6);
    let p = rng.gen_range(1..=n.min(4));
    let a = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(0.1..2.0));
    let y0 = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
    let s0 = DVector::from_fn(n, |_, _| rng.gen_range(0.0..1.5));
    let b = &a * x0;
    let c = a.transpose() * y0 + s0;
    Model::new(c, a, b, None, None, vec![ConeSpec::NonNegOrthant { n }], 0.0).unwrap()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Optimum over all basic feasible solutions.
fn vertex_enumeration(m: &Model) -> Option<f64> {
    let (p, n) = (m.p(), m.n());
    let mut best: Option<f64> = None;
    for basis in subsets(n, p) {
        let ab = DMatrix::from_fn(p, p, |i, j| m.a[(i, basis[j])]);
        if ab.determinant().abs() < 1e-10 {
            continue;
        }
        let xb = ab.lu().solve(&m.b).unwrap();
        if xb.iter().any(|&v| v < -1e-10) {
            continue;
        }
        let obj: f64 = basis.iter().zip(xb.iter()).map(|(&j, &v)| m.c[j] * v).sum();
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}

/// `min <C, X>  s.t.  <A_i, X> = b_i,  X psd`, strictly feasible on both sides.
fn random_sdp(n: usize, rng: &mut impl Rng) -> Model {
    let p = rng.gen_range(1..=(n * (n + 1) / 2 - 1).min(6));
    let x0 = random_spd(n, rng);
    let mut rows = vec![];
    let mut b = vec![];
    let mut c = random_spd(n, rng);
    for _ in 0..p {
        let ai = random_sym(n, rng);
        b.push(ai.dot(&x0));
        c += &ai * rng.gen_range(-1.0..1.0);
        rows.push(vec_real(&ai));
    }
    Model::new(
        DVector::from_vec(vec_real(&c)),
        rows_to_matrix(&rows, n * n),
        DVector::from_vec(b),
        None,
        None,
        vec![ConeSpec::PosSemidefinite { n, complex: false }],
        0.0,
    )
    .unwrap()
}

/// A Hermitian SDP and its real `2n` lifting.
fn random_hermitian_sdp(n: usize, rng: &mut impl Rng) -> (Model, Model) {
    let p = rng.gen_range(1..=4);
    let (x0r, x0i) = random_hpd(n, rng);
    let (mut cr, mut ci) = random_hpd(n, rng);
    let (mut rows, mut lifted, mut b) = (vec![], vec![], vec![]);
    for _ in 0..p {
        let (ar, ai) = random_herm(n, rng);
        b.push(ar.dot(&x0r) + ai.dot(&x0i));
        let y: f64 = rng.gen_range(-1.0..1.0);
        cr += &ar * y;
        ci += &ai * y;
        rows.push(vec_cplx(&ar, &ai));
        lifted.push(vec_real(&(lift(&ar, &ai) * 0.5)));
    }
    let b = DVector::from_vec(b);
    let direct = Model::new(
        DVector::from_vec(vec_cplx(&cr, &ci)),
        rows_to_matrix(&rows, 2 * n * n),
        b.clone(),
        None,
        None,
        vec![ConeSpec::PosSemidefinite { n, complex: true }],
        0.0,
    )
    .unwrap();
    let real = Model::new(
        DVector::from_vec(vec_real(&(lift(&cr, &ci) * 0.5))),
        rows_to_matrix(&lifted, 4 * n * n),
        b,
        None,
        None,
        vec![ConeSpec::PosSemidefinite { n: 2 * n, complex: false }],
        0.0,
    )
    .unwrap();
    (direct, real)
}

fn toy_qre() -> Model {
    load("toy_qre.cbf")
}

/// Linear map on row-major `vec X` given by its action on unit matrices.
fn linear_map(n: usize, out: usize, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(out * out, n * n);
    for k in 0..n * n {
        let mut e = DMatrix::zeros(n, n);
        e[(k / n, k % n)] = 1.0;
        m.set_column(k, &DVector::from_vec(vec_real(&f(&e))));
    }
    m
}

/// Random density-matrix constraints on `(t, vec X)`: `tr X = 1` and two more random equalities.
fn state_constraints(n: usize, rng: &mut impl Rng) -> (DMatrix<f64>, DVector<f64>) {
    let x0 = random_spd(n, rng);
    let x0 = &x0 / x0.trace();
    let mut rows = vec![];
    let mut b = vec![];
    let eye = DMatrix::<f64>::identity(n, n);
    for a in [eye, random_sym(n, rng), random_sym(n, rng)] {
        b.push(a.dot(&x0));
        rows.push([0.0].into_iter().chain(vec_real(&a)).collect::<Vec<_>>());
    }
    (rows_to_matrix(&rows, 1 + n * n), DVector::from_vec(b))
}

/// `G = -[1, 0; 0, I; 0, M]` so the cone slice is `(t, X, M vec X)`.
fn qre_slice(n: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = 1 + 2 * n * n;
    let mut g = DMatrix::zeros(q, 1 + n * n);
    g[(0, 0)] = -1.0;
    for i in 0..n * n {
        g[(1 + i, 1 + i)] = -1.0;
    }
    g.view_mut((1 + n * n, 1), (n * n, n * n)).copy_from(&(-m));
    g
}

/// Conditional entropy minimization through the QCE cone and through QRE with `Y = tr_B X (x) I`.
fn qce_pair(rng: &mut impl Rng) -> (Model, Model) {
    let n = 4;
    let (a, b) = state_constraints(n, rng);
    let mut c = DVector::zeros(1 + n * n);
    c[0] = 1.0;
    let qce = Model::new(
        c.clone(),
        a.clone(),
        b.clone(),
        None,
        None,
        vec![ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![1], complex: false }],
        0.0,
    )
    .unwrap();
    let m = linear_map(n, n, |e| {
        let mut y = DMatrix::zeros(4, 4);
        for a in 0..2 {
            for a2 in 0..2 {
                let tr: f64 = (0..2).map(|k| e[(2 * a + k, 2 * a2 + k)]).sum();
                for k in 0..2 {
                    y[(2 * a + k, 2 * a2 + k)] = tr;
                }
            }
        }
        y
    });
    let qre = Model::new(c, a, b, Some(qre_slice(n, &m)), None, vec![ConeSpec::QuantRelEntr { n, complex: false }], 0.0)
        .unwrap();
    (qce, qre)
}

/// Key-rate style minimization through QKD (identity G, two blocks) and through QRE with `Y = Z(X)`.
fn qkd_pair(rng: &mut impl Rng) -> (Model, Model) {
    let n = 4;
    let (a, b) = state_constraints(n, rng);
    let mut c = DVector::zeros(1 + n * n);
    c[0] = 1.0;
    let qkd = Model::new(
        c.clone(),
        a.clone(),
        b.clone(),
        None,
        None,
        vec![ConeSpec::QuantKeyDist { g: GInfo::Identity(n), z: ZInfo::Blocks(2), complex: false }],
        0.0,
    )
    .unwrap();
    let m = linear_map(n, n, |e| DMatrix::from_fn(4, 4, |i, j| if (i < 2) == (j < 2) { e[(i, j)] } else { 0.0 }));
    let qre = Model::new(c, a, b, Some(qre_slice(n, &m)), None, vec![ConeSpec::QuantRelEntr { n, complex: false }], 0.0)
        .unwrap();
    (qkd, qre)
}

/// `min tr T  s.t.  (T, X, Y)` in the log-perspective epigraph, `X = [[2, 1], [1, 2]]`, `Y = I`,
/// over compact coordinates so that `G` is tall with full column rank.
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

/// `min S(X || Y) + sum c_i Y_ii  s.t.  tr Y = 1` with `X = diag(x)` fixed.
fn diagonal_qre(x: &[f64], cw: &[f64]) -> Model {
    let n = x.len();
    let nv = 1 + 2 * n * n;
    let mut c = DVector::zeros(nv);
    c[0] = 1.0;
    let (xo, yo) = (1, 1 + n * n);
    let mut rows = vec![];
    let mut b = vec![];
    for i in 0..n {
        c[yo + i * n + i] = cw[i];
        let mut r = vec![0.0; nv];
        r[xo + i * n + i] = 1.0;
        rows.push(r);
        b.push(x[i]);
        for j in i + 1..n {
            let mut r = vec![0.0; nv];
            r[xo + i * n + j] = 1.0;
            r[xo + j * n + i] = 1.0;
            rows.push(r);
            b.push(0.0);
        }
    }
    let mut r = vec![0.0; nv];
    for i in 0..n {
        r[yo + i * n + i] = 1.0;
    }
    rows.push(r);
    b.push(1.0);
    Model::new(c, rows_to_matrix(&rows, nv), DVector::from_vec(b), None, None, vec![ConeSpec::QuantRelEntr { n, complex: false }], 0.0)
        .unwrap()
}

/// Maximizes the concave dual `g(l) = sum x_i (log(c_i + l) + 1) - l` by golden-section search.
fn diagonal_qre_dual(x: &[f64], cw: &[f64]) -> f64 {
    let g = |l: f64| x.iter().zip(cw).map(|(xi, ci)| xi * ((ci + l).ln() + 1.0)).sum::<f64>() - l;
    let cmin = cw.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-cmin + 1e-12, x.iter().sum::<f64>() + cw.iter().map(|c| c.abs()).sum::<f64>() + 10.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..200 {
        if ga > gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - phi * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + phi * (hi - lo);
            gb = g(b);
        }
    }
    g(0.5 * (lo + hi))
}

// ---------------------------------------------------------------- criteria

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let r = solve(&toy_qre(), &quiet());
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(r.sol_status == SolStatus::Optimal, "status {}", r.sol_status);
    ensure!((r.p_obj - 2.772588704578).abs() < 1e-6, "p_obj {}", r.p_obj);
    ensure!((r.d_obj - r.p_obj).abs() < 1e-6, "d_obj {}", r.d_obj);
    let y = &r.s_opt.as_slice()[5..9];
    for (got, want) in y.iter().zip([1.0, 0.5, 0.5, 1.0]) {
        ensure!((got - want).abs() < 1e-6, "Y* = {y:?}");
    }
    ensure!(r.num_iter <= 30, "{} iterations", r.num_iter);
    ensure!(elapsed < 10.0, "{elapsed:.2} s");
    Ok(format!("p_obj {:.12}, {} iterations, {elapsed:.2} s", r.p_obj, r.num_iter))
}

fn c2_barrier_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cones = catalog();
    let mut worst = [0.0f64; 4];
    for spec in &cones {
        let mut cone = spec.build().unwrap();
        for _ in 0..20 {
            let s = random_interior(cone.as_mut(), &mut rng);
            let inv = invariants(cone.as_mut(), &s, &mut rng);
            let name = format!("{spec:?}");
            ensure!(inv.homogeneity < 1e-8, "{name}: homogeneity {:e}", inv.homogeneity);
            ensure!(inv.hess_point < 1e-7, "{name}: hessian identity {:e}", inv.hess_point);
            ensure!(inv.round_trip < 1e-9, "{name}: inverse round trip {:e}", inv.round_trip);
            ensure!(inv.fd_grad < 1e-6, "{name}: gradient vs differences {:e}", inv.fd_grad);
            for (w, v) in worst.iter_mut().zip([inv.homogeneity, inv.hess_point, inv.round_trip, inv.fd_grad]) {
                *w = w.max(v);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 60.0, "{elapsed:.1} s");
    Ok(format!("{} cones, worst errors {:.1e} {:.1e} {:.1e} {:.1e}", cones.len(), worst[0], worst[1], worst[2], worst[3]))
}

fn c3_block_elimination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut specs = vec![];
    for n in [2, 3] {
        for complex in [false, true] {
            specs.extend([
                ConeSpec::QuantEntr { n, complex },
                ConeSpec::QuantRelEntr { n, complex },
                ConeSpec::QuantCondEntr { dims: vec![2, n], sys: vec![1], complex },
                ConeSpec::QuantCondEntr { dims: vec![n, 2], sys: vec![0], complex },
                ConeSpec::QuantKeyDist { g: GInfo::Identity(n), z: ZInfo::Blocks(n), complex },
                ConeSpec::OpPerspecTr { n, func: PerspecFunc::Log, complex },
                ConeSpec::OpPerspecTr { n, func: PerspecFunc::Power(0.3), complex },
                ConeSpec::OpPerspecEpi { n, func: PerspecFunc::Log, complex },
                ConeSpec::OpPerspecEpi { n, func: PerspecFunc::Power(1.5), complex },
            ]);
        }
        let kraus: Vec<_> = (0..2)
            .map(|_| DMatrix::from_fn(2 * n, n, |_, _| num_complex::Complex64::new(rng.gen_range(-1.0..1.0), 0.0)))
            .collect();
        specs.push(ConeSpec::QuantKeyDist { g: GInfo::Kraus(kraus), z: ZInfo::Blocks(2), complex: false });
    }
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let mut cone = spec.build().unwrap();
        let s = random_interior(cone.as_mut(), &mut rng);
        let fd = fd_hessian(cone.as_mut(), &s);
        cone.set_point(s.as_slice());
        let layout = cone.layout();
        let r = DVector::from_fn(layout.compact_dim(), |_, _| rng.gen_range(-1.0..1.0));
        let want = fd.clone().lu().solve(&r).ok_or(format!("{spec:?}: singular difference Hessian"))?;
        let got = layout.to_compact(cone.inv_hess_prod(layout.from_compact(r.as_slice()).as_slice()).unwrap().as_slice());
        let err = (&got - &want).norm() / want.norm();
        ensure!(err < 1e-7, "{spec:?}: relative error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("{} cones, worst {worst:.1e}", specs.len()))
}

fn c4_diagonal_restriction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 3;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
        let diag = |d: &[f64]| vec_real(&DMatrix::from_diagonal(&DVector::from_column_slice(d)));
        let u = rng.gen_range(0.5..2.0);
        let t = x.iter().map(|v| v * (v / u).ln()).sum::<f64>() + rng.gen_range(0.5..3.0);
        let mut qe = ConeSpec::QuantEntr { n, complex: false }.build().unwrap();
        let mut ce = ConeSpec::ClassEntr { n }.build().unwrap();
        let sq: Vec<f64> = [t, u].into_iter().chain(diag(&x)).collect();
        let sc: Vec<f64> = [t, u].into_iter().chain(x.iter().copied()).collect();
        ensure!(qe.set_point(&sq) && ce.set_point(&sc), "QE/CE points rejected");
        let (gq, gc) = (qe.grad(), ce.grad());
        let pick = |g: &DVector<f64>, off: usize| (0..n).map(|i| g[off + i * n + i]).collect::<Vec<_>>();
        let gq_red: Vec<f64> = [gq[0], gq[1]].into_iter().chain(pick(&gq, 2)).collect();
        let e = (qe.barrier() - ce.barrier()).abs().max((DVector::from_vec(gq_red) - &gc).norm() / gc.norm());
        worst = worst.max(e);

        let t = x.iter().zip(&y).map(|(a, b)| a * (a / b).ln()).sum::<f64>() + rng.gen_range(0.5..3.0);
        let mut qre = ConeSpec::QuantRelEntr { n, complex: false }.build().unwrap();
        let mut cre = ConeSpec::ClassRelEntr { n }.build().unwrap();
        let sq: Vec<f64> = [t].into_iter().chain(diag(&x)).chain(diag(&y)).collect();
        let sc: Vec<f64> = [t].into_iter().chain(x.iter().copied()).chain(y.iter().copied()).collect();
        ensure!(qre.set_point(&sq) && cre.set_point(&sc), "QRE/CRE points rejected");
        let (gq, gc) = (qre.grad(), cre.grad());
        let gq_red: Vec<f64> = [gq[0]].into_iter().chain(pick(&gq, 1)).chain(pick(&gq, 1 + n * n)).collect();
        let e = (qre.barrier() - cre.barrier()).abs().max((DVector::from_vec(gq_red) - &gc).norm() / gc.norm());
        worst = worst.max(e);
    }
    ensure!(worst < 1e-10, "oracle mismatch {worst:e}");

    let mut gaps = vec![];
    for _ in 0..3 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let cw: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let r = solve(&diagonal_qre(&x, &cw), &quiet());
        ensure!(r.sol_status == SolStatus::Optimal, "diagonal program: {}", r.sol_status);
        let oracle = diagonal_qre_dual(&x, &cw);
        let gap = (r.p_obj - oracle).abs();
        ensure!(gap < 1e-7, "objective {} vs golden-section {oracle} ({gap:e})", r.p_obj);
        gaps.push(gap);
    }
    Ok(format!("oracles agree to {worst:.1e}, programs to {:.1e}", gaps.iter().fold(0.0f64, |a, &b| a.max(b))))
}

fn c5_lp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..25 {
        let m = random_lp(&mut rng);
        let opt = vertex_enumeration(&m).ok_or(format!("LP {k}: no vertex"))?;
        let r = solve(&m, &quiet());
        ensure!(r.stats.stepper == Stepper::NesterovTodd, "LP {k} not on the NT path");
        ensure!(r.sol_status == SolStatus::Optimal, "LP {k}: {}", r.sol_status);
        let err = (r.p_obj - opt).abs() / opt.abs().max(1.0);
        ensure!(err < 1e-7, "LP {k}: {} vs vertex optimum {opt}", r.p_obj);
        worst = worst.max(err);
    }
    Ok(format!("25 LPs, worst error {worst:.1e}"))
}

fn min_eig_real(v: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, v);
    ((&m + m.transpose()) * 0.5).symmetric_eigenvalues().min()
}

fn c6_sdp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..25 {
        let n = rng.gen_range(2..=8);
        let m = random_sdp(n, &mut rng);
        let r = solve(&m, &quiet());
        ensure!(r.sol_status == SolStatus::Optimal, "SDP {k} (n = {n}): {}", r.sol_status);
        ensure!(r.opt_gap <= 1e-8 && r.p_feas <= 1e-8 && r.d_feas <= 1e-8, "SDP {k}: {} {} {}", r.opt_gap, r.p_feas, r.d_feas);
        // independent certificate checks on the returned pair
        let res = (&m.a * &r.x_opt - &m.b).amax();
        ensure!(res <= 1e-7 * (1.0 + m.b.amax()), "SDP {k}: primal residual {res:e}");
        let dres = (m.a.transpose() * &r.y_opt - &r.z_opt + &m.c).amax();
        ensure!(dres <= 1e-7 * (1.0 + m.c.amax()), "SDP {k}: dual residual {dres:e}");
        ensure!(min_eig_real(r.s_opt.as_slice(), n) > -1e-8 && min_eig_real(r.z_opt.as_slice(), n) > -1e-8, "SDP {k}: not psd");
        let gap = (m.c.dot(&r.x_opt) + m.b.dot(&r.y_opt)).abs();
        ensure!(gap <= 1e-7 * (1.0 + r.p_obj.abs()), "SDP {k}: duality gap {gap:e}");
    }
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let n = rng.gen_range(2..=4);
        let (direct, real) = random_hermitian_sdp(n, &mut rng);
        let (rd, rr) = (solve(&direct, &quiet()), solve(&real, &quiet()));
        ensure!(rd.sol_status == SolStatus::Optimal && rr.sol_status == SolStatus::Optimal, "Hermitian SDP {k}: {} / {}", rd.sol_status, rr.sol_status);
        let err = (rd.p_obj - rr.p_obj).abs();
        ensure!(err < 1e-7, "Hermitian SDP {k}: {} vs lifted {}", rd.p_obj, rr.p_obj);
        worst = worst.max(err);
    }
    Ok(format!("25 real SDPs certified, 10 Hermitian SDPs match liftings to {worst:.1e}"))
}

fn c7_cone_slices() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for (label, (a, b)) in [("QCE", qce_pair(&mut rng)), ("QKD", qkd_pair(&mut rng))] {
        let (ra, rb) = (solve(&a, &quiet()), solve(&b, &quiet()));
        ensure!(ra.sol_status == SolStatus::Optimal && rb.sol_status == SolStatus::Optimal, "{label}: {} / {}", ra.sol_status, rb.sol_status);
        let err = (ra.p_obj - rb.p_obj).abs();
        ensure!(err < 1e-7, "{label}: {} vs QRE reformulation {}", ra.p_obj, rb.p_obj);
        worst = worst.max(err);
    }
    Ok(format!("QCE and QKD match QRE reformulations to {worst:.1e}"))
}

fn random_pattern(n: usize, density: f64, rng: &mut impl Rng) -> SparseSym {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            if rng.gen_bool(density) {
                let x = rng.gen_range(-1.0..1.0);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
    }
    SparseSym::from_vec(n, &v)
}

fn c8_sparse_schur() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=15);
        let m = rng.gen_range(1..=25);
        let rows: Vec<SparseSym> = (0..m)
            .map(|_| {
                let d = if rng.gen_bool(0.2) { 0.9 } else { rng.gen_range(0.02..0.4) };
                random_pattern(n, d, &mut rng)
            })
            .collect();
        let x = random_spd(n, &mut rng);
        let (s, d) = (assemble_schur_sparse(&rows, &x), assemble_schur_dense(&rows, &x));
        let err = (&s - &d).norm() / d.norm().max(1e-300);
        ensure!(err < 1e-10, "relative error {err:e}");
        worst = worst.max(err);
    }
    let n = 60;
    let rows: Vec<SparseSym> = (0..200).map(|_| random_pattern(n, 0.05, &mut rng)).collect();
    let x = random_spd(n, &mut rng);
    let time = |f: &dyn Fn() -> DMatrix<f64>| {
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            std::hint::black_box(f());
            best = best.min(t.elapsed().as_secs_f64());
        }
        best
    };
    let ts = time(&|| assemble_schur_sparse(&rows, &x));
    let td = time(&|| assemble_schur_dense(&rows, &x));
    ensure!(ts < td, "sparse {ts:.4} s not faster than dense {td:.4} s");
    Ok(format!("50 patterns to {worst:.1e}; 95% sparse, 200 rows: sparse {:.1} ms vs dense {:.1} ms", ts * 1e3, td * 1e3))
}

fn c9_infeasibility() -> Outcome {
    let st = quiet();
    let m = load("infeasible_lp.cbf");
    let r = solve(&m, &st);
    ensure!(r.sol_status == SolStatus::PrimalInfeasible, "primal: {}", r.sol_status);
    let lin = -(m.b.dot(&r.y_opt) + m.h.dot(&r.z_opt));
    let res = (m.a.transpose() * &r.y_opt + m.g.tr_mul(&r.z_opt)).amax();
    ensure!(lin > 0.0 && res <= st.tol_infeas * lin, "certificate: residual {res:e}, -b'y - h'z = {lin}");
    ensure!(r.z_opt.iter().all(|&v| v >= 0.0), "z outside the dual cone");

    let m = load("unbounded_lp.cbf");
    let r = solve(&m, &st);
    ensure!(r.sol_status == SolStatus::DualInfeasible, "dual: {}", r.sol_status);
    let lin = -m.c.dot(&r.x_opt);
    let res = (&m.a * &r.x_opt).amax().max((m.g.mul(&r.x_opt) + &r.s_opt).amax());
    ensure!(lin > 0.0 && res <= st.tol_infeas * lin, "certificate: residual {res:e}, -c'x = {lin}");
    ensure!(r.s_opt.iter().all(|&v| v >= 0.0), "s outside the cone");
    Ok("primal_infeasible and dual_infeasible certified".into())
}

fn c10_invhess_avoidance() -> Outcome {
    let m = ope_tall_g();
    let std_run = solve(&m, &SolverSettings { use_invhess: Some(true), ..quiet() });
    let avoid = solve(&m, &SolverSettings { use_invhess: Some(false), ..quiet() });
    ensure!(std_run.sol_status == SolStatus::Optimal && avoid.sol_status == SolStatus::Optimal, "{} / {}", std_run.sol_status, avoid.sol_status);
    ensure!(avoid.stats.invhess_avoided, "avoidance mode not engaged");
    ensure!((std_run.p_obj - avoid.p_obj).abs() < 1e-7, "{} vs {}", std_run.p_obj, avoid.p_obj);
    ensure!(avoid.stats.inv_hess_calls_after_init == 0, "{} inverse-Hessian calls", avoid.stats.inv_hess_calls_after_init);
    Ok(format!(
        "objectives {:.10} / {:.10}; inverse-Hessian calls after init {} vs {}",
        std_run.p_obj, avoid.p_obj, std_run.stats.inv_hess_calls_after_init, avoid.stats.inv_hess_calls_after_init
    ))
}

fn c11_round_trips() -> Outcome {
    for (name, complex) in [("small_sdp.dat-s", false), ("small_sdp.dat-c", true)] {
        let m = load(name);
        let text = write_sdpa(&m).map_err(|e| e.to_string())?;
        ensure!(read_sdpa(&text, complex).map_err(|e| e.to_string())? == m, "{name} changed in an SDPA round trip");
        ensure!(read_cbf(&write_cbf(&m)).map_err(|e| e.to_string())? == m, "{name} changed in a CBF round trip");
    }
    for name in ["toy_qre.cbf", "infeasible_lp.cbf", "unbounded_lp.cbf", "small_sdp.cbf", "small_sdp_primal.cbf"] {
        let m = load(name);
        ensure!(read_cbf(&write_cbf(&m)).map_err(|e| e.to_string())? == m, "{name} changed in a CBF round trip");
    }
    let (rs, rc) = (solve(&load("small_sdp.dat-s"), &quiet()), solve(&load("small_sdp.cbf"), &quiet()));
    ensure!((rs.p_obj - rc.p_obj).abs() < 1e-8, "SDPA {} vs CBF {}", rs.p_obj, rc.p_obj);
    Ok(format!("round trips exact; SDPA/CBF objectives differ by {:.1e}", (rs.p_obj - rc.p_obj).abs()))
}

fn acceptance_problems() -> Vec<(String, Model)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut out = vec![("toy QRE".to_string(), toy_qre()), ("OPE tall G".to_string(), ope_tall_g())];
    for name in ["infeasible_lp.cbf", "unbounded_lp.cbf", "small_sdp.dat-s", "small_sdp.dat-c"] {
        out.push((name.to_string(), load(name)));
    }
    for k in 0..25 {
        out.push((format!("LP {k}"), random_lp(&mut rng)));
    }
    for k in 0..25 {
        let n = rng.gen_range(2..=8);
        out.push((format!("SDP {k}"), random_sdp(n, &mut rng)));
    }
    for k in 0..5 {
        let (d, r) = random_hermitian_sdp(rng.gen_range(2..=4), &mut rng);
        out.push((format!("Hermitian SDP {k}"), d));
        out.push((format!("lifted SDP {k}"), r));
    }
    let (a, b) = qce_pair(&mut rng);
    out.push(("QCE".into(), a));
    out.push(("QCE as QRE".into(), b));
    let (a, b) = qkd_pair(&mut rng);
    out.push(("QKD".into(), a));
    out.push(("QKD as QRE".into(), b));
    out.push(("diagonal QRE".into(), diagonal_qre(&[0.5, 1.0, 1.5], &[0.2, -0.1, 0.4])));
    out
}

fn c12_degraded_mode() -> Outcome {
    let problems = acceptance_problems();
    let mut worst_ratio: f64 = 0.0;
    for (name, m) in &problems {
        let base = solve(m, &quiet());
        ensure!(base.sol_status.is_certified(), "{name}: default run {}", base.sol_status);
        let budget = 3 * SolverSettings::default().max_iter;
        let r: SolveReport = solve(m, &SolverSettings { ir: false, toa: false, max_iter: budget, ..quiet() });
        ensure!(r.sol_status == base.sol_status, "{name}: {} without ir/toa (default {})", r.sol_status, base.sol_status);
        if base.sol_status == SolStatus::Optimal {
            ensure!(close(r.p_obj, base.p_obj, 1e-6), "{name}: {} vs {}", r.p_obj, base.p_obj);
        }
        ensure!(r.num_iter <= 3 * base.num_iter.max(1), "{name}: {} iterations without ir/toa vs {} by default", r.num_iter, base.num_iter);
        worst_ratio = worst_ratio.max(r.num_iter as f64 / base.num_iter.max(1) as f64);
    }
    Ok(format!("{} problems, worst iteration ratio to the default run {worst_ratio:.2}", problems.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("worked QRE example", c1_worked_example),
        ("barrier identities", c2_barrier_identities),
        ("block-elimination oracles", c3_block_elimination),
        ("diagonal restriction", c4_diagonal_restriction),
        ("LP vs vertex enumeration", c5_lp),
        ("SDP self-certification", c6_sdp),
        ("cone-slice cross-checks", c7_cone_slices),
        ("sparse Schur assembly", c8_sparse_schur),
        ("infeasibility detection", c9_infeasibility),
        ("inverse-Hessian avoidance", c10_invhess_avoidance),
        ("format round trips", c11_round_trips),
        ("degraded-mode convergence", c12_degraded_mode),
    ];
    let mut failed = vec![];
    let mut err = std::io::stderr();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let line = match &outcome {
            Ok(detail) => format!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {:>2} FAIL  {name}: {why} [{secs:.1} s]", i + 1)
            }
        };
        // written past the test harness capture so the summary always shows
        writeln!(err, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
