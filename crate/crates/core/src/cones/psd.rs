use nalgebra::{Cholesky, DMatrix, DVector};

use super::util::{herm, identity, logdet, sandwich, Packer};
use super::{Cone, ConeError, SymmetricCone};
use crate::linalg::{congruence, herm_part, mat_to_vec, Block, Eig, Layout, Scalar};

/// Positive semidefinite cone over symmetric (`f64`) or Hermitian (`Complex64`) matrices.
#[derive(Debug, Clone)]
pub struct PosSemidefinite<T: Scalar> {
    n: usize,
    s: DMatrix<T>,
    s_inv: DMatrix<T>,
    logdet: f64,
    feas: bool,
    // NT scaling factor: r^† z r = r^{-1} s r^{-†} = lambda, diagonal
    r: DMatrix<T>,
    r_inv: DMatrix<T>,
    lam: DMatrix<T>,
}

impl<T: Scalar> PosSemidefinite<T> {
    pub fn new(n: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        Self {
            n,
            s: z.clone(),
            s_inv: z.clone(),
            logdet: 0.0,
            feas: false,
            r: z.clone(),
            r_inv: z.clone(),
            lam: z,
        }
    }

    fn vec(m: &DMatrix<T>) -> DVector<f64> {
        Packer::new(0).mat(m).done()
    }
}

impl<T: Scalar> Cone for PosSemidefinite<T> {
    fn name(&self) -> &'static str {
        "pos_semidefinite"
    }

    fn dim(&self) -> usize {
        self.n * self.n * T::width()
    }

    fn nu(&self) -> f64 {
        self.n as f64
    }

    fn layout(&self) -> Layout {
        Layout::new(vec![Block::Herm { n: self.n, complex: T::IS_COMPLEX }])
    }

    fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    fn set_point(&mut self, s: &[f64]) -> bool {
        self.s = herm(s, self.n);
        self.feas = false;
        let Ok(e) = Eig::new(&self.s) else { return false };
        if e.min() <= 0.0 {
            return false;
        }
        self.logdet = logdet(&e.lam);
        self.s_inv = e.apply(|l| 1.0 / l);
        self.feas = true;
        true
    }

    fn feasible(&self) -> bool {
        self.feas
    }

    fn barrier(&self) -> f64 {
        -self.logdet
    }

    fn grad(&self) -> DVector<f64> {
        -mat_to_vec(&self.s_inv)
    }

    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        Self::vec(&sandwich(&self.s_inv, &herm(v, self.n)))
    }

    fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError> {
        Ok(Self::vec(&sandwich(&self.s, &herm(v, self.n))))
    }

    fn third_dir(&mut self, ds: &[f64]) -> Option<DVector<f64>> {
        let d = herm::<T>(ds, self.n);
        let a = &self.s_inv * d;
        let m = &a * &a * &self.s_inv * T::lift(-2.0);
        Some(Self::vec(&m))
    }

    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        let i = Self::vec(&identity::<T>(self.n));
        (i.clone(), i)
    }

    fn as_symmetric(&mut self) -> Option<&mut dyn SymmetricCone> {
        Some(self)
    }
}

impl<T: Scalar> SymmetricCone for PosSemidefinite<T> {
    fn nt_update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ConeError> {
        // factored form: never squares the conditioning of s or z
        let ls = Cholesky::new(herm::<T>(s, self.n)).ok_or(ConeError::Infeasible)?.l();
        let lz = Cholesky::new(herm::<T>(z, self.n)).ok_or(ConeError::Infeasible)?.l();
        let svd = (lz.adjoint() * &ls).svd(true, true);
        let (u, vt) = (svd.u.ok_or(ConeError::Numerical("nt_update"))?, svd.v_t.ok_or(ConeError::Numerical("nt_update"))?);
        let sig = svd.singular_values;
        if sig.iter().any(|&x| !(x > 0.0)) {
            return Err(ConeError::Numerical("nt_update"));
        }
        let isq = DMatrix::from_diagonal(&sig.map(|x| T::lift(1.0 / x.sqrt())));
        self.r = ls * vt.adjoint() * &isq;
        self.r_inv = isq * u.adjoint() * lz.adjoint();
        self.lam = DMatrix::from_diagonal(&sig.map(T::lift));
        Ok(())
    }

    fn nt_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        let t = congruence(&self.r_inv, &herm(v, self.n));
        Self::vec(&herm_part(&congruence(&self.r_inv.adjoint(), &t)))
    }

    fn nt_inv_hess_prod(&self, v: &[f64]) -> DVector<f64> {
        let t = congruence(&self.r.adjoint(), &herm(v, self.n));
        Self::vec(&herm_part(&congruence(&self.r, &t)))
    }

    fn lambda(&self) -> DVector<f64> {
        Self::vec(&self.lam)
    }

    fn w_prod(&self, v: &[f64]) -> DVector<f64> {
        Self::vec(&herm_part(&congruence(&self.r.adjoint(), &herm(v, self.n))))
    }

    fn w_t_prod(&self, v: &[f64]) -> DVector<f64> {
        Self::vec(&herm_part(&congruence(&self.r, &herm(v, self.n))))
    }

    fn w_inv_prod(&self, v: &[f64]) -> DVector<f64> {
        Self::vec(&herm_part(&congruence(&self.r_inv.adjoint(), &herm(v, self.n))))
    }

    fn w_inv_t_prod(&self, v: &[f64]) -> DVector<f64> {
        Self::vec(&herm_part(&congruence(&self.r_inv, &herm(v, self.n))))
    }

    fn jordan_prod(&self, u: &[f64], v: &[f64]) -> DVector<f64> {
        let (u, v) = (herm::<T>(u, self.n), herm::<T>(v, self.n));
        Self::vec(&((&u * &v + &v * &u) * T::lift(0.5)))
    }

    fn jordan_div(&self, u: &[f64], v: &[f64]) -> Result<DVector<f64>, ConeError> {
        let e = Eig::new(&herm::<T>(u, self.n))?;
        let vt = e.to_basis(&herm(v, self.n));
        let mut x = vt.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                let d = e.lam[i] + e.lam[j];
                if d == 0.0 {
                    return Err(ConeError::Numerical("jordan_div"));
                }
                x[(i, j)] = vt[(i, j)] * T::lift(2.0 / d);
            }
        }
        Ok(Self::vec(&e.from_basis(&x)))
    }

    fn identity(&self) -> DVector<f64> {
        Self::vec(&identity::<T>(self.n))
    }

    fn step_to_boundary(&self, s: &[f64], ds: &[f64]) -> f64 {
        let s = herm::<T>(s, self.n);
        let Some(c) = Cholesky::new(s) else { return 0.0 };
        let l = c.l();
        let Some(linv) = l.clone().try_inverse() else { return 0.0 };
        let m = herm_part(&(&linv * herm::<T>(ds, self.n) * linv.adjoint()));
        match Eig::new(&m) {
            Ok(e) if e.min() < 0.0 => (-1.0 / e.min()).min(1.0),
            Ok(_) => 1.0,
            Err(_) => 0.0,
        }
    }

    fn nt_scaling_matrix(&self) -> Option<DMatrix<f64>> {
        if T::IS_COMPLEX {
            return None;
        }
        Some((&self.r * self.r.adjoint()).map(|v| v.re()))
    }
}
