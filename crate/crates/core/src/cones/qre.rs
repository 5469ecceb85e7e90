use nalgebra::{DMatrix, DVector};

use super::epigraph::{EpiCore, Epigraph};
use super::util::{assemble_herm_op, identity, logdet, logdet_third, mdim, sandwich, solve_herm, Packer, Reader};
use super::ConeError;
use crate::linalg::{
    cholesky_retry, d2_basis, d3spectral, divided_diff_first, divided_diff_second, hadamard, hadamard_div, inner,
    Block, Eig, PdFactor, Scalar, ScalarFn,
};

/// `closure{(t, X, Y) : t >= tr[X log X - X log Y]}`; barrier parameter `1 + 2n`.
pub type QuantRelEntr<T> = Epigraph<QreCore<T>>;

impl<T: Scalar> QuantRelEntr<T> {
    pub fn new(n: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        Epigraph::from_core(QreCore {
            n,
            x: z.clone(),
            ex: None,
            ey: None,
            x_inv: z.clone(),
            y_inv: z,
            d1x: DMatrix::zeros(n, n),
            d1y: DMatrix::zeros(n, n),
            d2x: None,
            d2y: None,
            f: 0.0,
            logdet: 0.0,
            gf: DVector::zeros(2 * mdim::<T>(n)),
            schur: None,
        })
    }
}

struct Schur<T: Scalar> {
    zeta: f64,
    dxx: DMatrix<f64>,
    dxy: DMatrix<f64>,
    q: DMatrix<T>,
    fac: PdFactor,
}

pub struct QreCore<T: Scalar> {
    n: usize,
    x: DMatrix<T>,
    ex: Option<Eig<T>>,
    ey: Option<Eig<T>>,
    x_inv: DMatrix<T>,
    y_inv: DMatrix<T>,
    d1x: DMatrix<f64>,
    d1y: DMatrix<f64>,
    d2x: Option<Vec<DMatrix<f64>>>,
    d2y: Option<Vec<DMatrix<f64>>>,
    f: f64,
    logdet: f64,
    gf: DVector<f64>,
    schur: Option<Schur<T>>,
}

impl<T: Scalar> QreCore<T> {
    fn eigs(&self) -> (&Eig<T>, &Eig<T>) {
        (self.ex.as_ref().expect("point loaded"), self.ey.as_ref().expect("point loaded"))
    }

    fn d2y(&mut self) -> &[DMatrix<f64>] {
        if self.d2y.is_none() {
            let lam = &self.ey.as_ref().expect("point loaded").lam;
            self.d2y = Some(divided_diff_second(ScalarFn::Log, lam).expect("positive spectrum"));
        }
        self.d2y.as_deref().unwrap()
    }

    fn d2x(&mut self) -> &[DMatrix<f64>] {
        if self.d2x.is_none() {
            let lam = &self.ex.as_ref().expect("point loaded").lam;
            self.d2x = Some(divided_diff_second(ScalarFn::Log, lam).expect("positive spectrum"));
        }
        self.d2x.as_deref().unwrap()
    }

    /// `D^2 log(Y)[X, V]`.
    fn d2y_x(&mut self, v: &DMatrix<T>) -> DMatrix<T> {
        let x = self.x.clone();
        self.d2y();
        let ey = self.ey.as_ref().unwrap();
        ey.from_basis(&d2_basis(self.d2y.as_ref().unwrap(), &ey.to_basis(&x), &ey.to_basis(v)))
    }

    fn build_schur(&mut self, zeta: f64) -> Result<(), ConeError> {
        if matches!(&self.schur, Some(s) if s.zeta == zeta) {
            return Ok(());
        }
        self.d2y();
        let n = self.n;
        let (ex, ey) = self.eigs();
        let (lx, ly) = (&ex.lam, &ey.lam);
        let dxx = DMatrix::from_fn(n, n, |i, j| self.d1x[(i, j)] / zeta + 1.0 / (lx[i] * lx[j]));
        let dxy = self.d1y.map(|v| v / zeta);
        let yinv2 = DMatrix::from_fn(n, n, |i, j| 1.0 / (ly[i] * ly[j]));
        let q = ex.u.adjoint() * &ey.u;
        let xt = ey.to_basis(&self.x);
        let d2y = self.d2y.as_ref().unwrap();
        let c = assemble_herm_op::<T>(n, |e| {
            let syy = hadamard(&yinv2, e) - d2_basis(d2y, &xt, e) * T::lift(1.0 / zeta);
            let inner_x = hadamard_div(&dxx, &(&q * hadamard(&dxy, e) * q.adjoint()));
            syy - hadamard(&dxy, &(q.adjoint() * inner_x * &q))
        });
        let fac = cholesky_retry(&c).map_err(|_| ConeError::Numerical("quant_rel_entr schur"))?;
        self.schur = Some(Schur { zeta, dxx, dxy, q, fac });
        Ok(())
    }
}

impl<T: Scalar> EpiCore for QreCore<T> {
    fn name(&self) -> &'static str {
        "quant_rel_entr"
    }

    fn blocks(&self) -> Vec<Block> {
        let b = Block::Herm { n: self.n, complex: T::IS_COMPLEX };
        vec![b, b]
    }

    fn u_dim(&self) -> usize {
        2 * mdim::<T>(self.n)
    }

    fn nu_b(&self) -> f64 {
        2.0 * self.n as f64
    }

    fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    fn set_u(&mut self, u: &[f64]) -> bool {
        let n = self.n;
        let mut r = Reader::new(u);
        self.x = r.mat(n);
        let y: DMatrix<T> = r.mat(n);
        self.ex = None;
        self.ey = None;
        self.d2x = None;
        self.d2y = None;
        self.schur = None;
        let (Ok(ex), Ok(ey)) = (Eig::new(&self.x), Eig::new(&y)) else { return false };
        if ex.min() <= 0.0 || ey.min() <= 0.0 {
            return false;
        }
        let log_x = ex.apply(f64::ln);
        let log_y = ey.apply(f64::ln);
        self.f = ex.lam.iter().map(|l| l * l.ln()).sum::<f64>() - inner(&self.x, &log_y);
        self.logdet = logdet(&ex.lam) + logdet(&ey.lam);
        self.d1x = divided_diff_first(ScalarFn::Log, &ex.lam).expect("positive spectrum");
        self.d1y = divided_diff_first(ScalarFn::Log, &ey.lam).expect("positive spectrum");
        let gx = log_x - log_y + identity::<T>(n);
        let gy = -ey.from_basis(&hadamard(&self.d1y, &ey.to_basis(&self.x)));
        self.gf = Packer::new(self.gf.len()).mat(&gx).mat(&gy).done();
        self.x_inv = ex.apply(|l| 1.0 / l);
        self.y_inv = ey.apply(|l| 1.0 / l);
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
        Packer::new(self.gf.len()).mat(&(-&self.x_inv)).mat(&(-&self.y_inv)).done()
    }

    fn hess_f_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let n = self.n;
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(n);
        let dy: DMatrix<T> = r.mat(n);
        let d2 = self.d2y_x(&dy);
        let (ex, ey) = self.eigs();
        let dlx_dx = ex.from_basis(&hadamard(&self.d1x, &ex.to_basis(&dx)));
        let dly_dy = ey.from_basis(&hadamard(&self.d1y, &ey.to_basis(&dy)));
        let dly_dx = ey.from_basis(&hadamard(&self.d1y, &ey.to_basis(&dx)));
        Packer::new(d.len()).mat(&(dlx_dx - dly_dy)).mat(&(-dly_dx - d2)).done()
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(self.n);
        let dy: DMatrix<T> = r.mat(self.n);
        Packer::new(d.len()).mat(&sandwich(&self.x_inv, &dx)).mat(&sandwich(&self.y_inv, &dy)).done()
    }

    fn solve_m(&mut self, zeta: f64, rv: &[f64]) -> Result<DVector<f64>, ConeError> {
        self.build_schur(zeta)?;
        let n = self.n;
        let mut r = Reader::new(rv);
        let rx: DMatrix<T> = r.mat(n);
        let ry: DMatrix<T> = r.mat(n);
        let (ex, ey) = self.eigs();
        let s = self.schur.as_ref().unwrap();
        let rxt = ex.to_basis(&rx);
        let ryt = ey.to_basis(&ry);
        let rhs = ryt + hadamard(&s.dxy, &(s.q.adjoint() * hadamard_div(&s.dxx, &rxt) * &s.q));
        let dyt = solve_herm(&s.fac, n, &rhs);
        let dxt = hadamard_div(&s.dxx, &(rxt + &s.q * hadamard(&s.dxy, &dyt) * s.q.adjoint()));
        Ok(Packer::new(rv.len()).mat(&ex.from_basis(&dxt)).mat(&ey.from_basis(&dyt)).done())
    }

    fn third_f(&mut self, d: &[f64]) -> Option<DVector<f64>> {
        let n = self.n;
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(n);
        let dy: DMatrix<T> = r.mat(n);
        self.d2x();
        self.d2y();
        let (ex, ey) = self.eigs();
        let (dxx, dyy, dxy) = (ex.to_basis(&dx), ey.to_basis(&dy), ey.to_basis(&dx));
        let d2x = self.d2x.as_ref().unwrap();
        let d2y = self.d2y.as_ref().unwrap();
        let a = ex.from_basis(&d2_basis(d2x, &dxx, &dxx)) - ey.from_basis(&d2_basis(d2y, &dyy, &dyy));
        let d3 = d3spectral(ScalarFn::Log, ey, &dy, &dy, &self.x).ok()?;
        let b = -ey.from_basis(&d2_basis(d2y, &dyy, &dxy)) * T::lift(2.0) - d3;
        Some(Packer::new(d.len()).mat(&a).mat(&b).done())
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(self.n);
        let dy: DMatrix<T> = r.mat(self.n);
        Packer::new(d.len()).mat(&logdet_third(&self.x_inv, &dx)).mat(&logdet_third(&self.y_inv, &dy)).done()
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        let (i, z) = (identity::<T>(self.n), DMatrix::<T>::zeros(self.n, self.n));
        vec![Packer::new(0).mat(&i).mat(&z).done(), Packer::new(0).mat(&z).mat(&i).done()]
    }
}
