use nalgebra::{DMatrix, DVector};

use super::epigraph::{EpiCore, Epigraph};
use super::util::{assemble_herm_op, identity, logdet, logdet_third, mdim, sandwich, solve_herm, Packer, Reader};
use super::ConeError;
use crate::linalg::{
    cholesky_retry, d2_basis, divided_diff_first, divided_diff_second, hadamard, hadamard_div, partial_trace,
    partial_trace_adjoint, Block, Eig, PdFactor, Scalar, ScalarFn,
};

/// `closure{(t, X) : t >= -S(X) + S(tr_sys X)}`; barrier parameter `1 + prod(dims)`.
pub type QuantCondEntr<T> = Epigraph<QceCore<T>>;

impl<T: Scalar> QuantCondEntr<T> {
    pub fn new(dims: Vec<usize>, sys: Vec<usize>) -> Result<Self, ConeError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(ConeError::InvalidParams("dims must be positive".into()));
        }
        if sys.iter().any(|&s| s >= dims.len()) {
            return Err(ConeError::InvalidParams(format!("sys {sys:?} out of range for {} subsystems", dims.len())));
        }
        let n: usize = dims.iter().product();
        let m = n / sys.iter().map(|&s| dims[s]).product::<usize>();
        let z = DMatrix::zeros(n, n);
        Ok(Epigraph::from_core(QceCore {
            n,
            m,
            dims,
            sys,
            ex: None,
            ey: None,
            x_inv: z,
            d1x: DMatrix::zeros(n, n),
            d1y: DMatrix::zeros(m, m),
            f: 0.0,
            logdet: 0.0,
            gf: DVector::zeros(mdim::<T>(n)),
            fac: None,
        }))
    }
}

pub struct QceCore<T: Scalar> {
    n: usize,
    m: usize,
    dims: Vec<usize>,
    sys: Vec<usize>,
    ex: Option<Eig<T>>,
    ey: Option<Eig<T>>,
    x_inv: DMatrix<T>,
    d1x: DMatrix<f64>,
    d1y: DMatrix<f64>,
    f: f64,
    logdet: f64,
    gf: DVector<f64>,
    fac: Option<(f64, DMatrix<f64>, PdFactor)>,
}

impl<T: Scalar> QceCore<T> {
    fn tr(&self, x: &DMatrix<T>) -> DMatrix<T> {
        partial_trace(x, &self.dims, &self.sys).expect("validated dims")
    }

    fn tr_adj(&self, y: &DMatrix<T>) -> DMatrix<T> {
        partial_trace_adjoint(y, &self.dims, &self.sys).expect("validated dims")
    }

    fn eigs(&self) -> (&Eig<T>, &Eig<T>) {
        (self.ex.as_ref().expect("point loaded"), self.ey.as_ref().expect("point loaded"))
    }
}

impl<T: Scalar> EpiCore for QceCore<T> {
    fn name(&self) -> &'static str {
        "quant_cond_entr"
    }

    fn blocks(&self) -> Vec<Block> {
        vec![Block::Herm { n: self.n, complex: T::IS_COMPLEX }]
    }

    fn u_dim(&self) -> usize {
        mdim::<T>(self.n)
    }

    fn nu_b(&self) -> f64 {
        self.n as f64
    }

    fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    fn set_u(&mut self, u: &[f64]) -> bool {
        let x: DMatrix<T> = Reader::new(u).mat(self.n);
        self.ex = None;
        self.ey = None;
        self.fac = None;
        let Ok(ex) = Eig::new(&x) else { return false };
        if ex.min() <= 0.0 {
            return false;
        }
        let Ok(ey) = Eig::new(&self.tr(&x)) else { return false };
        if ey.min() <= 0.0 {
            return false;
        }
        let ent = |lam: &DVector<f64>| lam.iter().map(|l| l * l.ln()).sum::<f64>();
        self.f = ent(&ex.lam) - ent(&ey.lam);
        self.logdet = logdet(&ex.lam);
        let g = ex.apply(f64::ln) - self.tr_adj(&ey.apply(f64::ln));
        self.gf = Packer::new(self.gf.len()).mat(&g).done();
        self.d1x = divided_diff_first(ScalarFn::Log, &ex.lam).expect("positive spectrum");
        self.d1y = divided_diff_first(ScalarFn::Log, &ey.lam).expect("positive spectrum");
        self.x_inv = ex.apply(|l| 1.0 / l);
        self.ex = Some(ex);
        self.ey = Some(ey);
        true
    }

    fn f_value(&self) -> f64 {
        self.f
    }

    fn b_value(&self) -> f64 {
        -self.logdet
    }

    fn grad_f(&self) -> &DVector<f64> {
        &self.gf
    }

    fn grad_b(&self) -> DVector<f64> {
        Packer::new(self.gf.len()).mat(&(-&self.x_inv)).done()
    }

    fn hess_f_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        let (ex, ey) = self.eigs();
        let a = ex.from_basis(&hadamard(&self.d1x, &ex.to_basis(&dx)));
        let b = ey.from_basis(&hadamard(&self.d1y, &ey.to_basis(&self.tr(&dx))));
        Packer::new(d.len()).mat(&(a - self.tr_adj(&b))).done()
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        Packer::new(d.len()).mat(&sandwich(&self.x_inv, &dx)).done()
    }

    fn solve_m(&mut self, zeta: f64, rv: &[f64]) -> Result<DVector<f64>, ConeError> {
        let (n, m) = (self.n, self.m);
        if !matches!(&self.fac, Some((z, _, _)) if *z == zeta) {
            let (ex, ey) = self.eigs();
            let lx = &ex.lam;
            let hh = DMatrix::from_fn(n, n, |i, j| self.d1x[(i, j)] / zeta + 1.0 / (lx[i] * lx[j]));
            let core = assemble_herm_op::<T>(m, |e| {
                let a = ey.from_basis(&hadamard_div(&self.d1y, &ey.to_basis(e))) * T::lift(zeta);
                let b = self.tr(&ex.from_basis(&hadamard_div(&hh, &ex.to_basis(&self.tr_adj(e)))));
                a - b
            });
            let fac = cholesky_retry(&core).map_err(|_| ConeError::Numerical("quant_cond_entr core"))?;
            self.fac = Some((zeta, hh, fac));
        }
        let r: DMatrix<T> = Reader::new(rv).mat(n);
        let (ex, _) = self.eigs();
        let (_, hh, fac) = self.fac.as_ref().unwrap();
        let hinv = |v: &DMatrix<T>| ex.from_basis(&hadamard_div(hh, &ex.to_basis(v)));
        let h_r = hinv(&r);
        let w = solve_herm(fac, m, &self.tr(&h_r));
        let out = h_r + hinv(&self.tr_adj(&w));
        Ok(Packer::new(rv.len()).mat(&out).done())
    }

    fn third_f(&mut self, d: &[f64]) -> Option<DVector<f64>> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        let dy = self.tr(&dx);
        let (ex, ey) = self.eigs();
        let d2x = divided_diff_second(ScalarFn::Log, &ex.lam).ok()?;
        let d2y = divided_diff_second(ScalarFn::Log, &ey.lam).ok()?;
        let (dxt, dyt) = (ex.to_basis(&dx), ey.to_basis(&dy));
        let a = ex.from_basis(&d2_basis(&d2x, &dxt, &dxt));
        let b = ey.from_basis(&d2_basis(&d2y, &dyt, &dyt));
        Some(Packer::new(d.len()).mat(&(a - self.tr_adj(&b))).done())
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        Packer::new(d.len()).mat(&logdet_third(&self.x_inv, &dx)).done()
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        vec![Packer::new(0).mat(&identity::<T>(self.n)).done()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;

    #[test]
    fn maximally_mixed_value() {
        let mut c = QuantCondEntr::<f64>::new(vec![2, 2], vec![1]).unwrap();
        let x = Packer::new(0).scalar(1.0).mat(&(identity::<f64>(4) * 0.25)).done();
        assert!(c.set_point(x.as_slice()));
        // -S(I/4) + S(I/2) = -log 4 + log 2
        assert!((c.f_value() + 2f64.ln()).abs() < 1e-14);
    }
}
