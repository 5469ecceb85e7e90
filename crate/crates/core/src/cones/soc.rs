use nalgebra::DVector;

use super::util::dot;
use super::{Cone, ConeError, SymmetricCone};
use crate::linalg::{Block, Layout};

/// `{(t, x) : t >= ||x||}` with barrier `-log(t^2 - ||x||^2)`.
#[derive(Debug, Clone)]
pub struct SecondOrder {
    n: usize,
    s: DVector<f64>,
    det: f64,
    feas: bool,
    wbar: DVector<f64>,
    eta: f64,
    lam: DVector<f64>,
}

/// `u^T J v` with `J = diag(1, -I)`.
fn jdot(u: &[f64], v: &[f64]) -> f64 {
    u[0] * v[0] - dot(&u[1..], &v[1..])
}

fn jmul(v: &[f64]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| if i == 0 { v[0] } else { -v[i] })
}

impl SecondOrder {
    /// `n` is the length of `x`; the cone lives in `R^{n+1}`.
    pub fn new(n: usize) -> Self {
        let d = n + 1;
        Self {
            n,
            s: DVector::zeros(d),
            det: 0.0,
            feas: false,
            wbar: DVector::zeros(d),
            eta: 1.0,
            lam: DVector::zeros(d),
        }
    }
}

impl Cone for SecondOrder {
    fn name(&self) -> &'static str {
        "second_order"
    }

    fn dim(&self) -> usize {
        self.n + 1
    }

    fn nu(&self) -> f64 {
        2.0
    }

    fn layout(&self) -> Layout {
        Layout::new(vec![Block::Scalars(self.n + 1)])
    }

    fn set_point(&mut self, s: &[f64]) -> bool {
        self.s.copy_from_slice(s);
        self.det = jdot(s, s);
        self.feas = s[0] > 0.0 && self.det > 0.0 && self.det.is_finite();
        self.feas
    }

    fn feasible(&self) -> bool {
        self.feas
    }

    fn barrier(&self) -> f64 {
        -self.det.ln()
    }

    fn grad(&self) -> DVector<f64> {
        jmul(self.s.as_slice()) * (-2.0 / self.det)
    }

    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        let js = jmul(self.s.as_slice());
        let a = dot(js.as_slice(), v);
        js * (4.0 * a / (self.det * self.det)) - jmul(v) * (2.0 / self.det)
    }

    fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError> {
        let a = dot(self.s.as_slice(), v);
        Ok(&self.s * a - jmul(v) * (0.5 * self.det))
    }

    fn third_dir(&mut self, ds: &[f64]) -> Option<DVector<f64>> {
        let d = self.det;
        let js = jmul(self.s.as_slice());
        let a = 2.0 * jdot(self.s.as_slice(), ds);
        let q = 2.0 * jdot(ds, ds);
        Some(&js * (-4.0 * a * a / d.powi(3) + 2.0 * q / (d * d)) + jmul(ds) * (4.0 * a / (d * d)))
    }

    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        let mut s = DVector::zeros(self.n + 1);
        s[0] = 2f64.sqrt();
        (s.clone(), s)
    }

    fn as_symmetric(&mut self) -> Option<&mut dyn SymmetricCone> {
        Some(self)
    }
}

impl SymmetricCone for SecondOrder {
    fn nt_update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ConeError> {
        let (ds, dz) = (jdot(s, s), jdot(z, z));
        if !(ds > 0.0 && dz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return Err(ConeError::Infeasible);
        }
        let sb = DVector::from_column_slice(s) / ds.sqrt();
        let zb = DVector::from_column_slice(z) / dz.sqrt();
        let gamma = ((1.0 + sb.dot(&zb)) / 2.0).sqrt();
        // NT point of the normalized pair, then its Jordan square root
        let w = (&sb + jmul(zb.as_slice())) / (2.0 * gamma);
        let mut v = &w / (2.0 * (w[0] + 1.0)).sqrt();
        v[0] = ((w[0] + 1.0) / 2.0).sqrt();
        self.wbar = v;
        self.eta = (ds / dz).powf(0.25);
        self.lam = self.w_prod(z);
        Ok(())
    }

    fn nt_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        let t = self.w_inv_prod(v);
        self.w_inv_prod(t.as_slice())
    }

    fn nt_inv_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        let t = self.w_prod(v);
        self.w_prod(t.as_slice())
    }

    fn lambda(&self) -> DVector<f64> {
        self.lam.clone()
    }

    fn w_prod(&self, v: &[f64]) -> DVector<f64> {
        let a = dot(self.wbar.as_slice(), v);
        (&self.wbar * (2.0 * a) - jmul(v)) * self.eta
    }

    fn w_inv_prod(&self, v: &[f64]) -> DVector<f64> {
        let jw = jmul(self.wbar.as_slice());
        let a = dot(jw.as_slice(), v);
        (jw * (2.0 * a) - jmul(v)) / self.eta
    }

    fn w_inv_t_prod(&self, v: &[f64]) -> DVector<f64> {
        self.w_inv_prod(v)
    }

    fn jordan_prod(&self, u: &[f64], v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        out[0] = dot(u, v);
        for i in 1..u.len() {
            out[i] = u[0] * v[i] + v[0] * u[i];
        }
        out
    }

    fn jordan_div(&self, u: &[f64], v: &[f64]) -> Result<DVector<f64>, ConeError> {
        let det = jdot(u, u);
        if det == 0.0 || u[0] == 0.0 {
            return Err(ConeError::Numerical("jordan_div"));
        }
        let mut x = DVector::zeros(u.len());
        x[0] = (u[0] * v[0] - dot(&u[1..], &v[1..])) / det;
        for i in 1..u.len() {
            x[i] = (v[i] - x[0] * u[i]) / u[0];
        }
        Ok(x)
    }

    fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.n + 1);
        e[0] = 1.0;
        e
    }

    fn step_to_boundary(&self, s: &[f64], ds: &[f64]) -> f64 {
        // q(a) = (t + a dt)^2 - ||x + a dx||^2 = qa a^2 + qb a + qc
        let qa = jdot(ds, ds);
        let qb = 2.0 * jdot(s, ds);
        let qc = jdot(s, s);
        let mut alpha: f64 = 1.0;
        if ds[0] < 0.0 {
            alpha = alpha.min(-s[0] / ds[0]);
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if qa == 0.0 {
            if qb < 0.0 {
                alpha = alpha.min(-qc / qb);
            }
        } else if disc >= 0.0 {
            let sq = disc.sqrt();
            let k = -0.5 * (qb + qb.signum() * sq);
            let mut roots = [k / qa, if k != 0.0 { qc / k } else { f64::INFINITY }];
            roots.sort_by(f64::total_cmp);
            if let Some(r) = roots.iter().find(|&&r| r > 0.0) {
                alpha = alpha.min(*r);
            }
        }
        alpha.max(0.0)
    }
}
