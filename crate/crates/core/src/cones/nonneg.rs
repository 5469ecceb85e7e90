use nalgebra::{DMatrix, DVector};

use super::{Cone, ConeError, SymmetricCone};
use crate::linalg::{Block, Layout};

/// `{x : x >= 0}` with barrier `-sum log x_i`.
#[derive(Debug, Clone)]
pub struct NonNegOrthant {
    n: usize,
    s: DVector<f64>,
    feas: bool,
    w: DVector<f64>,
    lam: DVector<f64>,
}

impl NonNegOrthant {
    pub fn new(n: usize) -> Self {
        Self { n, s: DVector::zeros(n), feas: false, w: DVector::zeros(n), lam: DVector::zeros(n) }
    }
}

impl Cone for NonNegOrthant {
    fn name(&self) -> &'static str {
        "nonneg_orthant"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn nu(&self) -> f64 {
        self.n as f64
    }

    fn layout(&self) -> Layout {
        Layout::new(vec![Block::Scalars(self.n)])
    }

    fn set_point(&mut self, s: &[f64]) -> bool {
        self.s.copy_from_slice(s);
        self.feas = s.iter().all(|&x| x > 0.0 && x.is_finite());
        self.feas
    }

    fn feasible(&self) -> bool {
        self.feas
    }

    fn barrier(&self) -> f64 {
        -self.s.iter().map(|x| x.ln()).sum::<f64>()
    }

    fn grad(&self) -> DVector<f64> {
        self.s.map(|x| -1.0 / x)
    }

    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| v[i] / (self.s[i] * self.s[i]))
    }

    fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError> {
        Ok(DVector::from_fn(self.n, |i, _| v[i] * self.s[i] * self.s[i]))
    }

    fn third_dir(&mut self, ds: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_fn(self.n, |i, _| -2.0 * ds[i] * ds[i] / self.s[i].powi(3)))
    }

    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(self.n, 1.0), DVector::from_element(self.n, 1.0))
    }

    fn as_symmetric(&mut self) -> Option<&mut dyn SymmetricCone> {
        Some(self)
    }
}

impl SymmetricCone for NonNegOrthant {
    fn nt_update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ConeError> {
        if s.iter().chain(z).any(|&x| !(x > 0.0)) {
            return Err(ConeError::Infeasible);
        }
        self.w = DVector::from_fn(self.n, |i, _| (s[i] / z[i]).sqrt());
        self.lam = DVector::from_fn(self.n, |i, _| (s[i] * z[i]).sqrt());
        Ok(())
    }

    fn nt_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| v[i] / (self.w[i] * self.w[i]))
    }

    fn nt_inv_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| v[i] * self.w[i] * self.w[i])
    }

    fn lambda(&self) -> DVector<f64> {
        self.lam.clone()
    }

    fn w_prod(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| v[i] * self.w[i])
    }

    fn w_inv_prod(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| v[i] / self.w[i])
    }

    fn w_inv_t_prod(&self, v: &[f64]) -> DVector<f64> {
        self.w_inv_prod(v)
    }

    fn jordan_prod(&self, u: &[f64], v: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| u[i] * v[i])
    }

    fn jordan_div(&self, u: &[f64], v: &[f64]) -> Result<DVector<f64>, ConeError> {
        if u.iter().any(|&x| x == 0.0) {
            return Err(ConeError::Numerical("jordan_div"));
        }
        Ok(DVector::from_fn(self.n, |i, _| v[i] / u[i]))
    }

    fn identity(&self) -> DVector<f64> {
        DVector::from_element(self.n, 1.0)
    }

    fn step_to_boundary(&self, s: &[f64], ds: &[f64]) -> f64 {
        s.iter().zip(ds).filter(|(_, &d)| d < 0.0).map(|(&x, &d)| -x / d).fold(1.0, f64::min).max(0.0)
    }

    fn nt_scaling_matrix(&self) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&self.w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_by_hand() {
        let mut c = NonNegOrthant::new(1);
        c.nt_update(&[4.0], &[1.0]).unwrap();
        assert!((c.w[0] - 2.0).abs() < 1e-15);
        assert!((c.lambda()[0] - 2.0).abs() < 1e-15);
        assert!((c.nt_hess_prod(&[4.0])[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_to_boundary_examples() {
        let c = NonNegOrthant::new(1);
        assert_eq!(c.step_to_boundary(&[1.0], &[-2.0]), 0.5);
        assert_eq!(c.step_to_boundary(&[1.0], &[1.0]), 1.0);
    }

    #[test]
    fn jordan_ops() {
        let c = NonNegOrthant::new(3);
        let u = [1.0, 2.0, 4.0];
        let v = [3.0, -1.0, 2.0];
        let x = c.jordan_div(&u, &v).unwrap();
        let back = c.jordan_prod(&u, x.as_slice());
        assert!((back - DVector::from_column_slice(&v)).norm() < 1e-15);
        assert_eq!(c.jordan_prod(c.identity().as_slice(), &v).as_slice(), &v);
    }
}
