use nalgebra::{DMatrix, DVector};

use super::util::dot;
use super::{Cone, ConeError};
use crate::linalg::{cholesky_retry, Block, Layout};

/// The `u`-part of a barrier `F(t, u) = -log(t - f(u)) + B(u)`.
///
/// `set_u` caches everything needed by `f_value`, `grad_f` and `grad_b`; the
/// Hessian-side caches are built lazily and reset by the next `set_u`.
pub trait EpiCore: Send {
    fn name(&self) -> &'static str;
    fn blocks(&self) -> Vec<Block>;
    fn u_dim(&self) -> usize;
    /// Barrier parameter of `B`.
    fn nu_b(&self) -> f64;
    fn is_complex(&self) -> bool {
        false
    }
    fn set_u(&mut self, u: &[f64]) -> bool;
    fn f_value(&self) -> f64;
    fn b_value(&self) -> f64;
    fn grad_f(&self) -> &DVector<f64>;
    fn grad_b(&self) -> DVector<f64>;
    fn hess_f_prod(&mut self, du: &[f64]) -> DVector<f64>;
    fn hess_b_prod(&mut self, du: &[f64]) -> DVector<f64>;
    /// Solves `(hess_f / zeta + hess_b) v = r`.
    fn solve_m(&mut self, zeta: f64, r: &[f64]) -> Result<DVector<f64>, ConeError>;
    /// `D^3 f[du, du]`.
    fn third_f(&mut self, _du: &[f64]) -> Option<DVector<f64>> {
        None
    }
    fn third_b(&mut self, du: &[f64]) -> DVector<f64>;
    /// Directions of `u` spanning the invariant central point, plus a feasible start.
    fn init_span(&self) -> Vec<DVector<f64>>;
    /// Explicit initial `(s0, z0)` for cores that do not use the central-point solve.
    fn custom_init(&mut self) -> Option<DVector<f64>> {
        None
    }
}

/// Cone oracle of `closure{(t, u) : t >= f(u)}` built from an [`EpiCore`].
pub struct Epigraph<C> {
    pub(crate) core: C,
    t: f64,
    zeta: f64,
    feas: bool,
}

impl<C: EpiCore> Epigraph<C> {
    pub(crate) fn from_core(core: C) -> Self {
        Self { core, t: 0.0, zeta: 0.0, feas: false }
    }

    /// `t - f(u)` at the loaded point.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Value of `f` at the loaded point.
    pub fn f_value(&self) -> f64 {
        self.core.f_value()
    }
}

impl<C: EpiCore> Cone for Epigraph<C> {
    fn name(&self) -> &'static str {
        self.core.name()
    }

    fn dim(&self) -> usize {
        1 + self.core.u_dim()
    }

    fn nu(&self) -> f64 {
        1.0 + self.core.nu_b()
    }

    fn layout(&self) -> Layout {
        let mut b = vec![Block::Scalars(1)];
        b.extend(self.core.blocks());
        Layout::new(b)
    }

    fn is_complex(&self) -> bool {
        self.core.is_complex()
    }

    fn set_point(&mut self, s: &[f64]) -> bool {
        self.feas = false;
        self.t = s[0];
        if !self.t.is_finite() || !self.core.set_u(&s[1..]) {
            return false;
        }
        self.zeta = self.t - self.core.f_value();
        self.feas = self.zeta > 0.0 && self.zeta.is_finite();
        self.feas
    }

    fn feasible(&self) -> bool {
        self.feas
    }

    fn barrier(&self) -> f64 {
        -self.zeta.ln() + self.core.b_value()
    }

    fn grad(&self) -> DVector<f64> {
        let gf = self.core.grad_f();
        let gu = gf / self.zeta + self.core.grad_b();
        let mut g = DVector::zeros(self.dim());
        g[0] = -1.0 / self.zeta;
        g.rows_mut(1, gu.len()).copy_from(&gu);
        g
    }

    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        let z = self.zeta;
        let vu = &v[1..];
        let a = v[0] - dot(self.core.grad_f().as_slice(), vu);
        let mu = self.core.hess_f_prod(vu) / z + self.core.hess_b_prod(vu) - self.core.grad_f() * (a / (z * z));
        let mut out = DVector::zeros(self.dim());
        out[0] = a / (z * z);
        out.rows_mut(1, mu.len()).copy_from(&mu);
        out
    }

    fn inv_hess_prod(&mut self, r: &[f64]) -> Result<DVector<f64>, ConeError> {
        let z = self.zeta;
        let rhs = DVector::from_column_slice(&r[1..]) + self.core.grad_f() * r[0];
        let vu = self.core.solve_m(z, rhs.as_slice())?;
        let mut out = DVector::zeros(self.dim());
        out[0] = z * z * r[0] + dot(self.core.grad_f().as_slice(), vu.as_slice());
        out.rows_mut(1, vu.len()).copy_from(&vu);
        Ok(out)
    }

    fn third_dir(&mut self, ds: &[f64]) -> Option<DVector<f64>> {
        let z = self.zeta;
        let du = &ds[1..];
        let tf = self.core.third_f(du)?;
        let hf = self.core.hess_f_prod(du);
        let a = ds[0] - dot(self.core.grad_f().as_slice(), du);
        let q = dot(du, hf.as_slice());
        let c0 = 2.0 * a * a / z.powi(3) + q / (z * z);
        let tu = self.core.grad_f() * c0 - hf * (2.0 * a / (z * z)) + tf / z + self.core.third_b(du);
        let mut out = DVector::zeros(self.dim());
        out[0] = -c0;
        out.rows_mut(1, tu.len()).copy_from(&tu);
        Some(out)
    }

    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        if let Some(s) = self.core.custom_init() {
            assert!(self.set_point(s.as_slice()), "custom initial point must be interior");
            let z = -self.grad();
            return (s, z);
        }
        let span = self.core.init_span();
        let k = span.len();
        let mut basis = Vec::with_capacity(k + 1);
        let mut e_t = DVector::zeros(self.dim());
        e_t[0] = 1.0;
        basis.push(e_t);
        let mut start = DVector::zeros(self.dim());
        for d in span {
            let mut b = DVector::zeros(self.dim());
            b.rows_mut(1, d.len()).copy_from(&d);
            start += &b;
            basis.push(b);
        }
        let ok = self.core.set_u(&start.as_slice()[1..]);
        assert!(ok, "central-point start must be in the domain");
        start[0] = self.core.f_value() + 1.0;
        central_point(self, &basis, start)
    }
}

/// Minimizes `|s|^2 / 2 + F(s)` over `s` in the span of `basis`, starting from the
/// interior point `start`; the minimizer satisfies `s = -grad F(s)` whenever the
/// central point lies in that span.
pub(crate) fn central_point(cone: &mut dyn Cone, basis: &[DVector<f64>], start: DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let k = basis.len();
    let b = DMatrix::from_columns(basis);
    let gram = b.transpose() * &b;
    let mut coef = gram.clone().lu().solve(&(b.transpose() * &start)).expect("independent span");
    let phi = |cone: &mut dyn Cone, s: &DVector<f64>| 0.5 * s.norm_squared() + cone.barrier();
    let mut s = &b * &coef;
    assert!(cone.set_point(s.as_slice()), "central-point start must be interior");
    let mut val = phi(cone, &s);
    for _ in 0..200 {
        let r = &s + cone.grad();
        if r.norm() <= 1e-14 * (1.0 + s.norm()) {
            break;
        }
        let g = b.transpose() * &r;
        let mut h = gram.clone();
        for j in 0..k {
            let hb = cone.hess_prod(basis[j].as_slice());
            for i in 0..k {
                h[(i, j)] += basis[i].dot(&hb);
            }
        }
        let Ok(fac) = cholesky_retry(&h) else { break };
        let step = -fac.solve(&g);
        let decrement = -g.dot(&step);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-12 {
            let trial = &coef + &step * alpha;
            let st = &b * &trial;
            if cone.set_point(st.as_slice()) {
                let v = phi(cone, &st);
                if v <= val - 1e-4 * alpha * decrement || decrement < 1e-20 {
                    coef = trial;
                    s = st;
                    val = v;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        cone.set_point(s.as_slice());
        if !moved {
            break;
        }
    }
    let z = -cone.grad();
    (s, z)
}
