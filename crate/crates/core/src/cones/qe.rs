use nalgebra::{DMatrix, DVector};

use super::epigraph::{EpiCore, Epigraph};
use super::util::{identity, logdet, mdim, rtrace, sandwich, Packer, Reader};
use super::ConeError;
use crate::linalg::{d2_basis, divided_diff_first, divided_diff_second, hadamard, hadamard_div, Block, Eig, Scalar, ScalarFn};

/// `closure{(t, u, X) : t >= tr[X log X] - tr[X] log u}`; barrier parameter `2 + n`.
pub type QuantEntr<T> = Epigraph<QeCore<T>>;

impl<T: Scalar> QuantEntr<T> {
    pub fn new(n: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        Epigraph::from_core(QeCore {
            n,
            u: 1.0,
            x: z.clone(),
            eig: None,
            x_inv: z,
            d1: DMatrix::zeros(n, n),
            trx: 0.0,
            f: 0.0,
            logdet: 0.0,
            gf: DVector::zeros(1 + mdim::<T>(n)),
            d2: None,
        })
    }
}

pub struct QeCore<T: Scalar> {
    n: usize,
    u: f64,
    x: DMatrix<T>,
    eig: Option<Eig<T>>,
    x_inv: DMatrix<T>,
    d1: DMatrix<f64>,
    trx: f64,
    f: f64,
    logdet: f64,
    gf: DVector<f64>,
    d2: Option<Vec<DMatrix<f64>>>,
}

impl<T: Scalar> QeCore<T> {
    fn e(&self) -> &Eig<T> {
        self.eig.as_ref().expect("point loaded")
    }

    fn dlog(&self, v: &DMatrix<T>) -> DMatrix<T> {
        let e = self.e();
        e.from_basis(&hadamard(&self.d1, &e.to_basis(v)))
    }
}

impl<T: Scalar> EpiCore for QeCore<T> {
    fn name(&self) -> &'static str {
        "quant_entr"
    }

    fn blocks(&self) -> Vec<Block> {
        vec![Block::Scalars(1), Block::Herm { n: self.n, complex: T::IS_COMPLEX }]
    }

    fn u_dim(&self) -> usize {
        1 + mdim::<T>(self.n)
    }

    fn nu_b(&self) -> f64 {
        1.0 + self.n as f64
    }

    fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    fn set_u(&mut self, u: &[f64]) -> bool {
        let mut r = Reader::new(u);
        self.u = r.scalar();
        self.x = r.mat(self.n);
        self.eig = None;
        self.d2 = None;
        if !(self.u > 0.0 && self.u.is_finite()) {
            return false;
        }
        let Ok(e) = Eig::new(&self.x) else { return false };
        if e.min() <= 0.0 {
            return false;
        }
        let lu = self.u.ln();
        self.trx = e.lam.sum();
        self.logdet = logdet(&e.lam);
        self.f = e.lam.iter().map(|l| l * l.ln()).sum::<f64>() - self.trx * lu;
        let g = e.apply(|l| l.ln() + 1.0 - lu);
        self.gf = Packer::new(self.gf.len()).scalar(-self.trx / self.u).mat(&g).done();
        self.x_inv = e.apply(|l| 1.0 / l);
        self.d1 = divided_diff_first(ScalarFn::Log, &e.lam).expect("positive spectrum");
        self.eig = Some(e);
        true
    }

    fn f_value(&self) -> f64 {
        self.f
    }

    fn b_value(&self) -> f64 {
        -self.u.ln() - self.logdet
    }

    fn grad_f(&self) -> &DVector<f64> {
        &self.gf
    }

    fn grad_b(&self) -> DVector<f64> {
        Packer::new(self.gf.len()).scalar(-1.0 / self.u).mat(&(-&self.x_inv)).done()
    }

    fn hess_f_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let du = r.scalar();
        let dx: DMatrix<T> = r.mat(self.n);
        let u = self.u;
        let hu = self.trx * du / (u * u) - rtrace(&dx) / u;
        let hx = self.dlog(&dx) - identity::<T>(self.n) * T::lift(du / u);
        Packer::new(d.len()).scalar(hu).mat(&hx).done()
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let du = r.scalar();
        let dx: DMatrix<T> = r.mat(self.n);
        Packer::new(d.len()).scalar(du / (self.u * self.u)).mat(&sandwich(&self.x_inv, &dx)).done()
    }

    fn solve_m(&mut self, zeta: f64, rv: &[f64]) -> Result<DVector<f64>, ConeError> {
        let mut r = Reader::new(rv);
        let ru = r.scalar();
        let rx: DMatrix<T> = r.mat(self.n);
        let e = self.e();
        let lam = &e.lam;
        let n = self.n;
        let dd = DMatrix::from_fn(n, n, |i, j| self.d1[(i, j)] / zeta + 1.0 / (lam[i] * lam[j]));
        let rt = e.to_basis(&rx);
        let x1 = hadamard_div(&dd, &rt);
        let tr1: f64 = (0..n).map(|i| x1[(i, i)].re()).sum();
        let tr2: f64 = (0..n).map(|i| 1.0 / dd[(i, i)]).sum();
        let u = self.u;
        let den = (1.0 + self.trx / zeta) / (u * u) - tr2 / (zeta * zeta * u * u);
        if !(den > 0.0) {
            return Err(ConeError::Numerical("quant_entr solve"));
        }
        let du = (ru + tr1 / (zeta * u)) / den;
        let c = du / (zeta * u);
        let mut xt = x1;
        for i in 0..n {
            xt[(i, i)] += T::lift(c / dd[(i, i)]);
        }
        let dx = e.from_basis(&xt);
        Ok(Packer::new(rv.len()).scalar(du).mat(&dx).done())
    }

    fn third_f(&mut self, d: &[f64]) -> Option<DVector<f64>> {
        let mut r = Reader::new(d);
        let du = r.scalar();
        let dx: DMatrix<T> = r.mat(self.n);
        if self.d2.is_none() {
            self.d2 = Some(divided_diff_second(ScalarFn::Log, &self.e().lam).expect("positive spectrum"));
        }
        let e = self.e();
        let dxt = e.to_basis(&dx);
        let d2x = e.from_basis(&d2_basis(self.d2.as_ref().unwrap(), &dxt, &dxt));
        let u = self.u;
        let tu = 2.0 * du * rtrace(&dx) / (u * u) - 2.0 * self.trx * du * du / u.powi(3);
        let tx = d2x + identity::<T>(self.n) * T::lift(du * du / (u * u));
        Some(Packer::new(d.len()).scalar(tu).mat(&tx).done())
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let du = r.scalar();
        let dx: DMatrix<T> = r.mat(self.n);
        let a = &self.x_inv * dx;
        let tx = &a * &a * &self.x_inv * T::lift(-2.0);
        Packer::new(d.len()).scalar(-2.0 * du * du / self.u.powi(3)).mat(&tx).done()
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        let e_u = Packer::new(0).scalar(1.0).mat(&DMatrix::<T>::zeros(self.n, self.n)).done();
        let e_x = Packer::new(0).scalar(0.0).mat(&identity::<T>(self.n)).done();
        vec![e_u, e_x]
    }
}
