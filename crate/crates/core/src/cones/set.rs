use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::{Cone, ConeError, ConeSpec, SymmetricCone};

/// Cartesian product of cones laid out contiguously.
pub struct ConeSet {
    specs: Vec<ConeSpec>,
    cones: Vec<Box<dyn Cone>>,
    offsets: Vec<usize>,
    inv_hess_calls: usize,
}

impl ConeSet {
    pub fn new(specs: &[ConeSpec]) -> Result<Self, ConeError> {
        let cones = specs.iter().map(ConeSpec::build).collect::<Result<Vec<_>, _>>()?;
        let mut offsets = vec![0];
        for c in &cones {
            offsets.push(offsets.last().unwrap() + c.dim());
        }
        Ok(Self { specs: specs.to_vec(), cones, offsets, inv_hess_calls: 0 })
    }

    pub fn specs(&self) -> &[ConeSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn nu(&self) -> f64 {
        self.cones.iter().map(|c| c.nu()).sum()
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn cone(&mut self, i: usize) -> &mut dyn Cone {
        self.cones[i].as_mut()
    }

    /// True when every cone is self-scaled.
    pub fn all_symmetric(&self) -> bool {
        self.specs.iter().all(ConeSpec::is_symmetric)
    }

    /// Number of inverse-Hessian products evaluated through this set.
    pub fn inv_hess_calls(&self) -> usize {
        self.inv_hess_calls
    }

    pub fn set_point(&mut self, s: &[f64]) -> bool {
        let mut ok = true;
        for i in 0..self.len() {
            let r = self.range(i);
            ok &= self.cones[i].set_point(&s[r]);
        }
        ok
    }

    pub fn barrier(&self) -> f64 {
        self.cones.iter().map(|c| c.barrier()).sum()
    }

    fn map_blocks(&mut self, v: &[f64], mut f: impl FnMut(&mut dyn Cone, &[f64]) -> DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let b = f(self.cones[i].as_mut(), &v[r.clone()]);
            out.rows_mut(r.start, r.len()).copy_from(&b);
        }
        out
    }

    pub fn grad(&mut self) -> DVector<f64> {
        self.map_blocks(&vec![0.0; self.dim()], |c, _| c.grad())
    }

    pub fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.map_blocks(v, |c, x| c.hess_prod(x))
    }

    pub fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError> {
        self.inv_hess_calls += 1;
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let b = self.cones[i].inv_hess_prod(&v[r.clone()])?;
            out.rows_mut(r.start, r.len()).copy_from(&b);
        }
        Ok(out)
    }

    /// `D^3 F[ds, ds]` with zero blocks for cones lacking a third-order oracle.
    pub fn third_dir(&mut self, ds: &[f64]) -> DVector<f64> {
        self.map_blocks(ds, |c, x| c.third_dir(x).unwrap_or_else(|| DVector::zeros(x.len())))
    }

    /// Per-cone `sqrt(r^T H^{-1} r)` with `r = z / mu + grad F(s)`; `s` must be loaded.
    pub fn proximity(&mut self, z: &[f64], mu: f64) -> Result<Vec<f64>, ConeError> {
        self.inv_hess_calls += 1;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let r = self.range(i);
            let c = self.cones[i].as_mut();
            let res = DVector::from_iterator(r.len(), z[r].iter().map(|v| v / mu)) + c.grad();
            let h = c.inv_hess_prod(res.as_slice())?;
            out.push(res.dot(&h).max(0.0).sqrt());
        }
        Ok(out)
    }

    pub fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        let mut s = DVector::zeros(self.dim());
        let mut z = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let (si, zi) = self.cones[i].init_point();
            s.rows_mut(r.start, r.len()).copy_from(&si);
            z.rows_mut(r.start, r.len()).copy_from(&zi);
        }
        (s, z)
    }

    fn sym(&mut self, i: usize) -> &mut dyn SymmetricCone {
        self.cones[i].as_symmetric().expect("symmetric cone")
    }

    pub fn nt_update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ConeError> {
        for i in 0..self.len() {
            let r = self.range(i);
            self.sym(i).nt_update(&s[r.clone()], &z[r])?;
        }
        Ok(())
    }

    fn sym_map(&mut self, v: &[f64], f: impl Fn(&dyn SymmetricCone, &[f64]) -> DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let b = f(self.sym(i), &v[r.clone()]);
            out.rows_mut(r.start, r.len()).copy_from(&b);
        }
        out
    }

    pub fn nt_hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.nt_hess_prod(x))
    }

    pub fn nt_inv_hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.nt_inv_hess_prod(x))
    }

    pub fn lambda(&mut self) -> DVector<f64> {
        self.sym_map(&vec![0.0; self.dim()], |c, _| c.lambda())
    }

    pub fn w_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.w_prod(x))
    }

    pub fn w_t_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.w_t_prod(x))
    }

    pub fn w_inv_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.w_inv_prod(x))
    }

    pub fn w_inv_t_prod(&mut self, v: &[f64]) -> DVector<f64> {
        self.sym_map(v, |c, x| c.w_inv_t_prod(x))
    }

    pub fn identity(&mut self) -> DVector<f64> {
        self.sym_map(&vec![0.0; self.dim()], |c, _| c.identity())
    }

    pub fn jordan_prod(&mut self, u: &[f64], v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let b = self.sym(i).jordan_prod(&u[r.clone()], &v[r.clone()]);
            out.rows_mut(r.start, r.len()).copy_from(&b);
        }
        out
    }

    pub fn jordan_div(&mut self, u: &[f64], v: &[f64]) -> Result<DVector<f64>, ConeError> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.len() {
            let r = self.range(i);
            let b = self.sym(i).jordan_div(&u[r.clone()], &v[r.clone()])?;
            out.rows_mut(r.start, r.len()).copy_from(&b);
        }
        Ok(out)
    }

    /// Per-cone real matrices `X_i` with `H(w)^{-1}[V] = X V X`, if every cone has one.
    pub fn nt_scaling_matrices(&mut self) -> Option<Vec<DMatrix<f64>>> {
        (0..self.len()).map(|i| self.sym(i).nt_scaling_matrix()).collect()
    }

    /// Largest `alpha` in `[0, 1]` keeping `s + alpha ds` in every (symmetric) cone.
    pub fn step_to_boundary(&mut self, s: &[f64], ds: &[f64]) -> f64 {
        let mut a: f64 = 1.0;
        for i in 0..self.len() {
            let r = self.range(i);
            a = a.min(self.sym(i).step_to_boundary(&s[r.clone()], &ds[r]));
        }
        a
    }
}
