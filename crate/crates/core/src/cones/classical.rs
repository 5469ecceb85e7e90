use nalgebra::DVector;

use super::epigraph::{EpiCore, Epigraph};
use super::ConeError;
use crate::linalg::Block;

/// `closure{(t, u, x) : t >= sum x log(x / u)}`; barrier parameter `2 + n`.
pub type ClassEntr = Epigraph<CeCore>;
/// `closure{(t, x, y) : t >= sum x log(x / y)}`; barrier parameter `1 + 2n`.
pub type ClassRelEntr = Epigraph<CreCore>;

impl ClassEntr {
    pub fn new(n: usize) -> Self {
        Epigraph::from_core(CeCore { n, u: 1.0, x: DVector::zeros(n), f: 0.0, gf: DVector::zeros(n + 1) })
    }
}

impl ClassRelEntr {
    pub fn new(n: usize) -> Self {
        Epigraph::from_core(CreCore {
            n,
            x: DVector::zeros(n),
            y: DVector::zeros(n),
            f: 0.0,
            gf: DVector::zeros(2 * n),
        })
    }
}

pub struct CeCore {
    n: usize,
    u: f64,
    x: DVector<f64>,
    f: f64,
    gf: DVector<f64>,
}

impl EpiCore for CeCore {
    fn name(&self) -> &'static str {
        "class_entr"
    }

    fn blocks(&self) -> Vec<Block> {
        vec![Block::Scalars(1 + self.n)]
    }

    fn u_dim(&self) -> usize {
        1 + self.n
    }

    fn nu_b(&self) -> f64 {
        1.0 + self.n as f64
    }

    fn set_u(&mut self, u: &[f64]) -> bool {
        self.u = u[0];
        self.x.copy_from_slice(&u[1..]);
        if !(self.u > 0.0) || self.x.iter().any(|&x| !(x > 0.0)) || u.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let lu = self.u.ln();
        let sigma = self.x.sum();
        self.f = self.x.iter().map(|&x| x * x.ln()).sum::<f64>() - sigma * lu;
        self.gf[0] = -sigma / self.u;
        for i in 0..self.n {
            self.gf[i + 1] = self.x[i].ln() + 1.0 - lu;
        }
        true
    }

    fn f_value(&self) -> f64 {
        self.f
    }

    fn b_value(&self) -> f64 {
        -self.u.ln() - self.x.iter().map(|x| x.ln()).sum::<f64>()
    }

    fn grad_f(&self) -> &DVector<f64> {
        &self.gf
    }

    fn grad_b(&self) -> DVector<f64> {
        DVector::from_fn(1 + self.n, |i, _| if i == 0 { -1.0 / self.u } else { -1.0 / self.x[i - 1] })
    }

    fn hess_f_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let (u, du, dx) = (self.u, d[0], &d[1..]);
        let sigma = self.x.sum();
        let sdx: f64 = dx.iter().sum();
        DVector::from_fn(1 + self.n, |i, _| {
            if i == 0 {
                sigma * du / (u * u) - sdx / u
            } else {
                -du / u + dx[i - 1] / self.x[i - 1]
            }
        })
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        DVector::from_fn(1 + self.n, |i, _| {
            let v = if i == 0 { self.u } else { self.x[i - 1] };
            d[i] / (v * v)
        })
    }

    fn solve_m(&mut self, zeta: f64, r: &[f64]) -> Result<DVector<f64>, ConeError> {
        // arrow matrix: [[m_uu, m_ux 1^T], [m_ux 1, diag(dx)]]
        let u = self.u;
        let m_uu = self.x.sum() / (zeta * u * u) + 1.0 / (u * u);
        let m_ux = -1.0 / (zeta * u);
        let dinv: Vec<f64> = self.x.iter().map(|&x| 1.0 / (1.0 / (zeta * x) + 1.0 / (x * x))).collect();
        let schur = m_uu - m_ux * m_ux * dinv.iter().sum::<f64>();
        let rhs = r[0] - m_ux * dinv.iter().zip(&r[1..]).map(|(d, r)| d * r).sum::<f64>();
        if !(schur > 0.0) {
            return Err(ConeError::Numerical("class_entr solve"));
        }
        let vu = rhs / schur;
        Ok(DVector::from_fn(1 + self.n, |i, _| if i == 0 { vu } else { dinv[i - 1] * (r[i] - m_ux * vu) }))
    }

    fn third_f(&mut self, d: &[f64]) -> Option<DVector<f64>> {
        let (u, du, dx) = (self.u, d[0], &d[1..]);
        let sigma = self.x.sum();
        let sdx: f64 = dx.iter().sum();
        Some(DVector::from_fn(1 + self.n, |i, _| {
            if i == 0 {
                -2.0 * sigma * du * du / u.powi(3) + 2.0 * du * sdx / (u * u)
            } else {
                let x = self.x[i - 1];
                du * du / (u * u) - dx[i - 1] * dx[i - 1] / (x * x)
            }
        }))
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        DVector::from_fn(1 + self.n, |i, _| {
            let v = if i == 0 { self.u } else { self.x[i - 1] };
            -2.0 * d[i] * d[i] / v.powi(3)
        })
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        let mut e_u = DVector::zeros(1 + self.n);
        e_u[0] = 1.0;
        let mut e_x = DVector::from_element(1 + self.n, 1.0);
        e_x[0] = 0.0;
        vec![e_u, e_x]
    }
}

pub struct CreCore {
    n: usize,
    x: DVector<f64>,
    y: DVector<f64>,
    f: f64,
    gf: DVector<f64>,
}

impl EpiCore for CreCore {
    fn name(&self) -> &'static str {
        "class_rel_entr"
    }

    fn blocks(&self) -> Vec<Block> {
        vec![Block::Scalars(2 * self.n)]
    }

    fn u_dim(&self) -> usize {
        2 * self.n
    }

    fn nu_b(&self) -> f64 {
        2.0 * self.n as f64
    }

    fn set_u(&mut self, u: &[f64]) -> bool {
        let n = self.n;
        self.x.copy_from_slice(&u[..n]);
        self.y.copy_from_slice(&u[n..]);
        if u.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return false;
        }
        self.f = 0.0;
        for i in 0..n {
            let (x, y) = (self.x[i], self.y[i]);
            let lr = x.ln() - y.ln();
            self.f += x * lr;
            self.gf[i] = lr + 1.0;
            self.gf[n + i] = -x / y;
        }
        true
    }

    fn f_value(&self) -> f64 {
        self.f
    }

    fn b_value(&self) -> f64 {
        -self.x.iter().chain(self.y.iter()).map(|v| v.ln()).sum::<f64>()
    }

    fn grad_f(&self) -> &DVector<f64> {
        &self.gf
    }

    fn grad_b(&self) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |i, _| if i < n { -1.0 / self.x[i] } else { -1.0 / self.y[i - n] })
    }

    fn hess_f_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            let (x, y, dx, dy) = (self.x[i], self.y[i], d[i], d[n + i]);
            out[i] = dx / x - dy / y;
            out[n + i] = -dx / y + x * dy / (y * y);
        }
        out
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |i, _| {
            let v = if i < n { self.x[i] } else { self.y[i - n] };
            d[i] / (v * v)
        })
    }

    fn solve_m(&mut self, zeta: f64, r: &[f64]) -> Result<DVector<f64>, ConeError> {
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            let (x, y) = (self.x[i], self.y[i]);
            let a = 1.0 / (zeta * x) + 1.0 / (x * x);
            let b = -1.0 / (zeta * y);
            let c = x / (zeta * y * y) + 1.0 / (y * y);
            let det = a * c - b * b;
            if !(det > 0.0) {
                return Err(ConeError::Numerical("class_rel_entr solve"));
            }
            out[i] = (c * r[i] - b * r[n + i]) / det;
            out[n + i] = (a * r[n + i] - b * r[i]) / det;
        }
        Ok(out)
    }

    fn third_f(&mut self, d: &[f64]) -> Option<DVector<f64>> {
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            let (x, y, dx, dy) = (self.x[i], self.y[i], d[i], d[n + i]);
            out[i] = -dx * dx / (x * x) + dy * dy / (y * y);
            out[n + i] = 2.0 * dx * dy / (y * y) - 2.0 * x * dy * dy / y.powi(3);
        }
        Some(out)
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |i, _| {
            let v = if i < n { self.x[i] } else { self.y[i - n] };
            -2.0 * d[i] * d[i] / v.powi(3)
        })
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        let n = self.n;
        let ex = DVector::from_fn(2 * n, |i, _| if i < n { 1.0 } else { 0.0 });
        let ey = DVector::from_fn(2 * n, |i, _| if i < n { 0.0 } else { 1.0 });
        vec![ex, ey]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;

    #[test]
    fn cre_gradient_at_ones() {
        let mut c = ClassRelEntr::new(1);
        assert!(c.set_point(&[1.0, 1.0, 1.0]));
        let g = c.grad();
        assert!((&g - DVector::from_column_slice(&[-1.0, 0.0, -2.0])).norm() < 1e-15);
        assert!((c.grad().dot(&DVector::from_column_slice(&[1.0, 1.0, 1.0])) + 3.0).abs() < 1e-14);
        c.set_point(&[2.0, 2.0, 2.0]);
        assert!((c.grad() * 2.0 - g).norm() < 1e-15);
    }

    #[test]
    fn cre_value() {
        let mut c = ClassRelEntr::new(2);
        assert!(c.set_point(&[1.0, 0.5, 0.5, 0.75, 0.25]));
        assert!((c.f_value() - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((c.f_value() - 0.143841).abs() < 1e-6);
        c.set_point(&[1.0, 0.3, 0.7, 0.3, 0.7]);
        assert!(c.f_value().abs() < 1e-15);
    }
}
