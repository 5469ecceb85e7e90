//! Oracle self-checks shared by the unit, property and acceptance tests.
//!
//! Everything here works in the compact orthonormal coordinates of
//! [`Cone::layout`], so finite differences never leave the Hermitian subspace.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::{Cone, ConeSpec, GInfo, PerspecFunc, ZInfo};

/// Relative errors of the barrier identities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    /// `|<grad F(s), s> + nu| / nu`.
    pub homogeneity: f64,
    /// `|hess F(s) s + grad F(s)| / |grad F(s)|`.
    pub hess_point: f64,
    /// `|H^{-1} H v - v| / |v|` for a random `v`.
    pub round_trip: f64,
    /// Gradient against central differences of the barrier.
    pub fd_grad: f64,
}

/// Every cone family with real and complex variants and the main parameter choices.
pub fn catalog() -> Vec<ConeSpec> {
    let mut kraus = Vec::new();
    for k in 0..2 {
        kraus.push(DMatrix::from_fn(3, 2, |i, j| Complex64::new(((i + 2 * j + k) % 3) as f64 * 0.5 + 0.2, 0.0)));
    }
    let mut out = vec![
        ConeSpec::NonNegOrthant { n: 3 },
        ConeSpec::SecondOrder { n: 3 },
        ConeSpec::ClassEntr { n: 3 },
        ConeSpec::ClassRelEntr { n: 3 },
    ];
    for complex in [false, true] {
        out.extend([
            ConeSpec::PosSemidefinite { n: 3, complex },
            ConeSpec::QuantEntr { n: 3, complex },
            ConeSpec::QuantRelEntr { n: 3, complex },
            ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![1], complex },
            ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![0], complex },
            ConeSpec::QuantKeyDist { g: GInfo::Identity(4), z: ZInfo::Blocks(2), complex },
            ConeSpec::QuantKeyDist { g: GInfo::Identity(4), z: ZInfo::Subsystems { dims: vec![2, 2], sys: vec![1] }, complex },
            ConeSpec::QuantKeyDist { g: GInfo::Kraus(kraus.clone()), z: ZInfo::Blocks(3), complex },
            ConeSpec::OpPerspecTr { n: 2, func: PerspecFunc::Log, complex },
            ConeSpec::OpPerspecTr { n: 2, func: PerspecFunc::Power(0.3), complex },
            ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Log, complex },
            ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Power(-0.5), complex },
            ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Power(1.5), complex },
        ]);
    }
    out
}

fn random_dir(cone: &dyn Cone, rng: &mut impl Rng) -> DVector<f64> {
    let layout = cone.layout();
    let c = DVector::from_fn(layout.compact_dim(), |_, _| rng.gen_range(-1.0..1.0));
    layout.from_compact(c.as_slice())
}

/// A random interior point: the initial point perturbed along a random direction
/// (halved past the boundary) and rescaled by a random factor.
pub fn random_interior(cone: &mut dyn Cone, rng: &mut impl Rng) -> DVector<f64> {
    let (s0, _) = cone.init_point();
    let d = random_dir(cone, rng);
    let mut step = 0.5 * s0.norm() / d.norm().max(1e-300);
    let scale = rng.gen_range(0.5..2.0);
    for _ in 0..60 {
        if cone.set_point((&s0 + &d * step).as_slice()) {
            // back off so the point keeps a margin from the boundary
            let s = (&s0 + &d * (0.5 * step)) * scale;
            assert!(cone.set_point(s.as_slice()), "convex combination must be interior");
            return s;
        }
        step *= 0.5;
    }
    let s = s0 * scale;
    assert!(cone.set_point(s.as_slice()), "scaled initial point must be interior");
    s
}

/// Columns are the compact basis vectors expressed in the vectorized space.
pub fn compact_basis(cone: &dyn Cone) -> Vec<DVector<f64>> {
    let layout = cone.layout();
    let k = layout.compact_dim();
    (0..k)
        .map(|i| {
            let mut e = DVector::zeros(k);
            e[i] = 1.0;
            layout.from_compact(e.as_slice())
        })
        .collect()
}

fn fd_step(s: &DVector<f64>) -> f64 {
    1e-4 * s.amax().min(1.0)
}

/// Fourth-order central differences of the barrier along every compact direction.
pub fn fd_grad(cone: &mut dyn Cone, s: &DVector<f64>) -> DVector<f64> {
    let basis = compact_basis(cone);
    let h = fd_step(s);
    let mut eval = |x: DVector<f64>| {
        assert!(cone.set_point(x.as_slice()), "finite-difference probe left the cone");
        cone.barrier()
    };
    let out = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|b| {
            let f = |k: f64| s + b * (k * h);
            (-eval(f(2.0)) + 8.0 * eval(f(1.0)) - 8.0 * eval(f(-1.0)) + eval(f(-2.0))) / (12.0 * h)
        }),
    );
    cone.set_point(s.as_slice());
    out
}

/// Hessian in compact coordinates from fourth-order differences of the gradient.
pub fn fd_hessian(cone: &mut dyn Cone, s: &DVector<f64>) -> DMatrix<f64> {
    let basis = compact_basis(cone);
    let layout = cone.layout();
    let h = fd_step(s);
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        let mut g = |t: f64| {
            let x = s + b * (t * h);
            assert!(cone.set_point(x.as_slice()), "finite-difference probe left the cone");
            layout.to_compact(cone.grad().as_slice())
        };
        let col = (-g(2.0) + g(1.0) * 8.0 - g(-1.0) * 8.0 + g(-2.0)) / (12.0 * h);
        m.set_column(j, &col);
    }
    cone.set_point(s.as_slice());
    (&m + m.transpose()) * 0.5
}

/// Hessian in compact coordinates assembled from `hess_prod`.
pub fn dense_hessian(cone: &mut dyn Cone) -> DMatrix<f64> {
    let layout = cone.layout();
    layout.assemble(|v| cone.hess_prod(v.as_slice()))
}

/// Evaluates all barrier identities at `s`; leaves `s` loaded.
pub fn invariants(cone: &mut dyn Cone, s: &DVector<f64>, rng: &mut impl Rng) -> Invariants {
    assert!(cone.set_point(s.as_slice()), "point must be interior");
    let nu = cone.nu();
    let g = cone.grad();
    let homogeneity = (g.dot(s) + nu).abs() / nu;
    let hs = cone.hess_prod(s.as_slice());
    let hess_point = (&hs + &g).norm() / g.norm();
    let v = random_dir(cone, rng);
    let hv = cone.hess_prod(v.as_slice());
    let back = cone.inv_hess_prod(hv.as_slice()).expect("inverse Hessian product");
    let round_trip = (&back - &v).norm() / v.norm();
    let layout = cone.layout();
    let gc = layout.to_compact(g.as_slice());
    let fd = fd_grad(cone, s);
    let fd_grad = (&fd - &gc).norm() / gc.norm();
    Invariants { homogeneity, hess_point, round_trip, fd_grad }
}
