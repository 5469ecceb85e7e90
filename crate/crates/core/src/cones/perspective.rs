use nalgebra::{DMatrix, DVector};

use super::epigraph::{central_point, EpiCore, Epigraph};
use super::util::{identity, logdet, logdet_third, mdim, rtrace, sandwich, Packer, Reader};
use super::{Cone, ConeError};
use crate::linalg::{
    cholesky_retry, d2_basis, divided_diff_first, divided_diff_second, hadamard, herm_part, Block, Eig, Layout,
    PdFactor, Scalar, ScalarFn,
};

/// Operator convex function of a perspective cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerspecFunc {
    /// `g(x) = -log x`.
    Log,
    /// `g(x) = -x^p` for `p` in `(0, 1)`, `g(x) = x^p` for `p` in `[-1, 0)` or `(1, 2)`.
    Power(f64),
}

impl PerspecFunc {
    pub fn validate(&self) -> Result<(), ConeError> {
        match *self {
            PerspecFunc::Log => Ok(()),
            PerspecFunc::Power(p) if (p > 0.0 && p < 1.0) || (-1.0..0.0).contains(&p) || (p > 1.0 && p < 2.0) => Ok(()),
            PerspecFunc::Power(p) => Err(ConeError::InvalidParams(format!(
                "power {p} is outside (0,1), [-1,0) and (1,2)"
            ))),
        }
    }

    fn sign(p: f64) -> f64 {
        if p > 0.0 && p < 1.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// `g` itself.
    pub fn g(&self) -> ScalarFn {
        match *self {
            PerspecFunc::Log => ScalarFn::NegLog,
            PerspecFunc::Power(p) => ScalarFn::Pow { p, c: Self::sign(p) },
        }
    }

    /// `x g(1/x)`.
    pub fn g_hat(&self) -> ScalarFn {
        match *self {
            PerspecFunc::Log => ScalarFn::XLogX,
            PerspecFunc::Power(p) => ScalarFn::Pow { p: 1.0 - p, c: Self::sign(p) },
        }
    }

    /// `x g(x)`.
    pub fn h(&self) -> ScalarFn {
        match *self {
            PerspecFunc::Log => ScalarFn::NegXLogX,
            PerspecFunc::Power(p) => ScalarFn::Pow { p: 1.0 + p, c: Self::sign(p) },
        }
    }
}

/// `P_g(X, Y) = X^{1/2} g(X^{-1/2} Y X^{-1/2}) X^{1/2}` with its first and second derivatives.
pub struct Perspective<T: Scalar> {
    func: PerspecFunc,
    xh: DMatrix<T>,
    xih: DMatrix<T>,
    yh: DMatrix<T>,
    yih: DMatrix<T>,
    /// Eigendecomposition of `Y^{-1/2} X Y^{-1/2}`.
    ext: Eig<T>,
    /// Eigendecomposition of `X^{-1/2} Y X^{-1/2}`.
    eyt: Eig<T>,
    d1_ghat: DMatrix<f64>,
    d1_g: DMatrix<f64>,
    d2_ghat: Vec<DMatrix<f64>>,
    d2_g: Vec<DMatrix<f64>>,
    d2_h: Vec<DMatrix<f64>>,
    value: DMatrix<T>,
}

/// `P_g(X, Y)`; fails unless both arguments are positive definite.
pub fn ncp_value<T: Scalar>(func: PerspecFunc, x: &DMatrix<T>, y: &DMatrix<T>) -> Result<DMatrix<T>, ConeError> {
    Ok(Perspective::new(func, x, y)?.value)
}

fn halves<T: Scalar>(m: &DMatrix<T>) -> Result<(Eig<T>, DMatrix<T>, DMatrix<T>), ConeError> {
    let e = Eig::new(m)?;
    if !(e.min() > 0.0) {
        return Err(ConeError::Infeasible);
    }
    let h = e.apply(f64::sqrt);
    let ih = e.apply(|l| 1.0 / l.sqrt());
    Ok((e, h, ih))
}

impl<T: Scalar> Perspective<T> {
    pub fn new(func: PerspecFunc, x: &DMatrix<T>, y: &DMatrix<T>) -> Result<Self, ConeError> {
        func.validate()?;
        let (_, xh, xih) = halves(&herm_part(x))?;
        let (_, yh, yih) = halves(&herm_part(y))?;
        let ext = Eig::new(&herm_part(&(&yih * x * &yih)))?;
        let eyt = Eig::new(&herm_part(&(&xih * y * &xih)))?;
        if !(ext.min() > 0.0 && eyt.min() > 0.0) {
            return Err(ConeError::Infeasible);
        }
        let (g, gh, h) = (func.g(), func.g_hat(), func.h());
        let value = herm_part(&(&xh * eyt.apply(|l| g.value(l)) * &xh));
        Ok(Self {
            func,
            d1_ghat: divided_diff_first(gh, &ext.lam)?,
            d1_g: divided_diff_first(g, &eyt.lam)?,
            d2_ghat: divided_diff_second(gh, &ext.lam)?,
            d2_g: divided_diff_second(g, &eyt.lam)?,
            d2_h: divided_diff_second(h, &eyt.lam)?,
            xh,
            xih,
            yh,
            yih,
            ext,
            eyt,
            value,
        })
    }

    pub fn func(&self) -> PerspecFunc {
        self.func
    }

    pub fn value(&self) -> &DMatrix<T> {
        &self.value
    }

    fn dghat(&self, v: &DMatrix<T>) -> DMatrix<T> {
        self.ext.from_basis(&hadamard(&self.d1_ghat, &self.ext.to_basis(v)))
    }

    fn dg(&self, v: &DMatrix<T>) -> DMatrix<T> {
        self.eyt.from_basis(&hadamard(&self.d1_g, &self.eyt.to_basis(v)))
    }

    fn d2(&self, e: &Eig<T>, d2: &[DMatrix<f64>], a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
        e.from_basis(&d2_basis(d2, &e.to_basis(a), &e.to_basis(b)))
    }

    fn sw(a: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
        herm_part(&(a * v * a))
    }

    /// `D_X P[V]`.
    pub fn dx(&self, v: &DMatrix<T>) -> DMatrix<T> {
        Self::sw(&self.yh, &self.dghat(&Self::sw(&self.yih, v)))
    }

    /// `D_Y P[V]`.
    pub fn dy(&self, v: &DMatrix<T>) -> DMatrix<T> {
        Self::sw(&self.xh, &self.dg(&Self::sw(&self.xih, v)))
    }

    /// Adjoint of `D_X P`.
    pub fn dx_adj(&self, w: &DMatrix<T>) -> DMatrix<T> {
        Self::sw(&self.yih, &self.dghat(&Self::sw(&self.yh, w)))
    }

    /// Adjoint of `D_Y P`.
    pub fn dy_adj(&self, w: &DMatrix<T>) -> DMatrix<T> {
        Self::sw(&self.xih, &self.dg(&Self::sw(&self.xh, w)))
    }

    /// Mixed second derivative `D^2_{XY} P[V_x, V_y]`.
    pub fn cross(&self, vx: &DMatrix<T>, vy: &DMatrix<T>) -> DMatrix<T> {
        let (ax, ay) = (Self::sw(&self.xih, vx), Self::sw(&self.xih, vy));
        let b = self.dg(&ay);
        let inner = &ax * &b + &b * &ax - self.d2(&self.eyt, &self.d2_h, &ax, &ay);
        Self::sw(&self.xh, &inner)
    }

    /// Hessian of `(X, Y) -> <W, P(X, Y)>` applied to `(dX, dY)`.
    pub fn hess_w(&self, w: &DMatrix<T>, dx: &DMatrix<T>, dy: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let wy = Self::sw(&self.yh, w);
        let wx = Self::sw(&self.xh, w);
        let dx_y = Self::sw(&self.yih, dx);
        let dx_x = Self::sw(&self.xih, dx);
        let dy_x = Self::sw(&self.xih, dy);
        let xx = self.d2(&self.ext, &self.d2_ghat, &wy, &dx_y);
        let yy = self.d2(&self.eyt, &self.d2_g, &wx, &dy_x);
        let b = self.dg(&dy_x);
        let into_x = &wx * &b + &b * &wx - self.d2(&self.eyt, &self.d2_h, &wx, &dy_x);
        let into_y = self.dg(&(&wx * &dx_x + &dx_x * &wx)) - self.d2(&self.eyt, &self.d2_h, &wx, &dx_x);
        let hx = Self::sw(&self.yih, &xx) + Self::sw(&self.xih, &into_x);
        let hy = Self::sw(&self.xih, &(yy + into_y));
        (hx, hy)
    }
}

/// `closure{(t, X, Y) : t >= tr P_g(X, Y)}`; barrier parameter `1 + 2n`.
pub type OpPerspecTr<T> = Epigraph<OptCore<T>>;

impl<T: Scalar> OpPerspecTr<T> {
    pub fn new(n: usize, func: PerspecFunc) -> Result<Self, ConeError> {
        func.validate()?;
        if n == 0 {
            return Err(ConeError::InvalidParams("dimension must be positive".into()));
        }
        let z = DMatrix::zeros(n, n);
        Ok(Epigraph::from_core(OptCore {
            n,
            func,
            p: None,
            x_inv: z.clone(),
            y_inv: z,
            f: 0.0,
            logdet: 0.0,
            gf: DVector::zeros(2 * mdim::<T>(n)),
            fac: None,
        }))
    }
}

pub struct OptCore<T: Scalar> {
    n: usize,
    func: PerspecFunc,
    p: Option<Perspective<T>>,
    x_inv: DMatrix<T>,
    y_inv: DMatrix<T>,
    f: f64,
    logdet: f64,
    gf: DVector<f64>,
    fac: Option<(f64, PdFactor)>,
}

impl<T: Scalar> OptCore<T> {
    fn hess_f_mats(&self, dx: &DMatrix<T>, dy: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        self.p.as_ref().expect("point loaded").hess_w(&identity(self.n), dx, dy)
    }
}

impl<T: Scalar> EpiCore for OptCore<T> {
    fn name(&self) -> &'static str {
        "op_perspec_tr"
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
        let mut r = Reader::new(u);
        let x: DMatrix<T> = r.mat(self.n);
        let y: DMatrix<T> = r.mat(self.n);
        self.p = None;
        self.fac = None;
        let Ok(p) = Perspective::new(self.func, &x, &y) else { return false };
        let (Ok(ex), Ok(ey)) = (Eig::new(&x), Eig::new(&y)) else { return false };
        self.f = rtrace(p.value());
        self.logdet = logdet(&ex.lam) + logdet(&ey.lam);
        self.x_inv = ex.apply(|l| 1.0 / l);
        self.y_inv = ey.apply(|l| 1.0 / l);
        let i = identity::<T>(self.n);
        self.gf = Packer::new(self.gf.len()).mat(&p.dx_adj(&i)).mat(&p.dy_adj(&i)).done();
        self.p = Some(p);
        self.f.is_finite()
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
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(self.n);
        let dy: DMatrix<T> = r.mat(self.n);
        let (hx, hy) = self.hess_f_mats(&dx, &dy);
        Packer::new(d.len()).mat(&hx).mat(&hy).done()
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let mut r = Reader::new(d);
        let dx: DMatrix<T> = r.mat(self.n);
        let dy: DMatrix<T> = r.mat(self.n);
        Packer::new(d.len()).mat(&sandwich(&self.x_inv, &dx)).mat(&sandwich(&self.y_inv, &dy)).done()
    }

    fn solve_m(&mut self, zeta: f64, rv: &[f64]) -> Result<DVector<f64>, ConeError> {
        let layout = Layout::new(self.blocks());
        if !matches!(&self.fac, Some((z, _)) if *z == zeta) {
            let n = self.n;
            let m = layout.assemble(|e| {
                let mut r = Reader::new(e.as_slice());
                let dx: DMatrix<T> = r.mat(n);
                let dy: DMatrix<T> = r.mat(n);
                let (hx, hy) = self.hess_f_mats(&dx, &dy);
                let s = T::lift(1.0 / zeta);
                Packer::new(e.len())
                    .mat(&(hx * s + sandwich(&self.x_inv, &dx)))
                    .mat(&(hy * s + sandwich(&self.y_inv, &dy)))
                    .done()
            });
            let fac = cholesky_retry(&m).map_err(|_| ConeError::Numerical("op_perspec_tr hessian"))?;
            self.fac = Some((zeta, fac));
        }
        let (_, fac) = self.fac.as_ref().unwrap();
        Ok(layout.from_compact(fac.solve(&layout.to_compact(rv)).as_slice()))
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

/// `closure{(T, X, Y) : T >= P_g(X, Y)}` in the Loewner order; barrier parameter `3n`.
pub struct OpPerspecEpi<T: Scalar> {
    n: usize,
    func: PerspecFunc,
    p: Option<Perspective<T>>,
    z_inv: DMatrix<T>,
    x_inv: DMatrix<T>,
    y_inv: DMatrix<T>,
    logdet: f64,
    feas: bool,
    fac: Option<PdFactor>,
}

impl<T: Scalar> OpPerspecEpi<T> {
    pub fn new(n: usize, func: PerspecFunc) -> Result<Self, ConeError> {
        func.validate()?;
        if n == 0 {
            return Err(ConeError::InvalidParams("dimension must be positive".into()));
        }
        let z = DMatrix::zeros(n, n);
        Ok(Self { n, func, p: None, z_inv: z.clone(), x_inv: z.clone(), y_inv: z, logdet: 0.0, feas: false, fac: None })
    }

    fn persp(&self) -> &Perspective<T> {
        self.p.as_ref().expect("point loaded")
    }

    fn split(&self, v: &[f64]) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        let mut r = Reader::new(v);
        (r.mat(self.n), r.mat(self.n), r.mat(self.n))
    }

    fn u_layout(&self) -> Layout {
        let b = Block::Herm { n: self.n, complex: T::IS_COMPLEX };
        Layout::new(vec![b, b])
    }

    /// `hess_w(Z^{-1}) + hess(-logdet X - logdet Y)` applied to `(dX, dY)`.
    fn m_prod(&self, dx: &DMatrix<T>, dy: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let (hx, hy) = self.persp().hess_w(&self.z_inv, dx, dy);
        (hx + sandwich(&self.x_inv, dx), hy + sandwich(&self.y_inv, dy))
    }

    fn factor(&mut self) -> Result<(), ConeError> {
        if self.fac.is_none() {
            let n = self.n;
            let m = self.u_layout().assemble(|e| {
                let mut r = Reader::new(e.as_slice());
                let dx: DMatrix<T> = r.mat(n);
                let dy: DMatrix<T> = r.mat(n);
                let (hx, hy) = self.m_prod(&dx, &dy);
                Packer::new(e.len()).mat(&hx).mat(&hy).done()
            });
            self.fac = Some(cholesky_retry(&m).map_err(|_| ConeError::Numerical("op_perspec_epi hessian"))?);
        }
        Ok(())
    }
}

impl<T: Scalar> Cone for OpPerspecEpi<T> {
    fn name(&self) -> &'static str {
        "op_perspec_epi"
    }

    fn dim(&self) -> usize {
        3 * mdim::<T>(self.n)
    }

    fn nu(&self) -> f64 {
        3.0 * self.n as f64
    }

    fn layout(&self) -> Layout {
        let b = Block::Herm { n: self.n, complex: T::IS_COMPLEX };
        Layout::new(vec![b, b, b])
    }

    fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    fn set_point(&mut self, s: &[f64]) -> bool {
        self.feas = false;
        self.p = None;
        self.fac = None;
        let (t, x, y) = self.split(s);
        let Ok(p) = Perspective::new(self.func, &x, &y) else { return false };
        let Ok(ez) = Eig::new(&(t - p.value())) else { return false };
        let (Ok(ex), Ok(ey)) = (Eig::new(&x), Eig::new(&y)) else { return false };
        if !(ez.min() > 0.0) {
            return false;
        }
        self.logdet = logdet(&ez.lam) + logdet(&ex.lam) + logdet(&ey.lam);
        self.z_inv = ez.apply(|l| 1.0 / l);
        self.x_inv = ex.apply(|l| 1.0 / l);
        self.y_inv = ey.apply(|l| 1.0 / l);
        self.p = Some(p);
        self.feas = self.logdet.is_finite();
        self.feas
    }

    fn feasible(&self) -> bool {
        self.feas
    }

    fn barrier(&self) -> f64 {
        -self.logdet
    }

    fn grad(&self) -> DVector<f64> {
        let p = self.persp();
        Packer::new(self.dim())
            .mat(&(-&self.z_inv))
            .mat(&(p.dx_adj(&self.z_inv) - &self.x_inv))
            .mat(&(p.dy_adj(&self.z_inv) - &self.y_inv))
            .done()
    }

    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64> {
        let (dt, dx, dy) = self.split(v);
        let p = self.persp();
        let k = sandwich(&self.z_inv, &(dt - p.dx(&dx) - p.dy(&dy)));
        let (mx, my) = self.m_prod(&dx, &dy);
        Packer::new(v.len()).mat(&k).mat(&(mx - p.dx_adj(&k))).mat(&(my - p.dy_adj(&k))).done()
    }

    fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError> {
        self.factor()?;
        let (rt, rx, ry) = self.split(v);
        let p = self.persp();
        let rhs = Packer::new(0).mat(&(rx + p.dx_adj(&rt))).mat(&(ry + p.dy_adj(&rt))).done();
        let layout = self.u_layout();
        let du = layout.from_compact(self.fac.as_ref().unwrap().solve(&layout.to_compact(rhs.as_slice())).as_slice());
        let mut r = Reader::new(du.as_slice());
        let dx: DMatrix<T> = r.mat(self.n);
        let dy: DMatrix<T> = r.mat(self.n);
        let z = self.z_inv.clone().try_inverse().ok_or(ConeError::Numerical("op_perspec_epi"))?;
        let dt = sandwich(&z, &rt) + p.dx(&dx) + p.dy(&dy);
        Ok(Packer::new(v.len()).mat(&dt).slice(du.as_slice()).done())
    }

    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>) {
        let n = self.n;
        let (i, o) = (identity::<T>(n), DMatrix::<T>::zeros(n, n));
        let basis = vec![
            Packer::new(0).mat(&i).mat(&o).mat(&o).done(),
            Packer::new(0).mat(&o).mat(&i).mat(&o).done(),
            Packer::new(0).mat(&o).mat(&o).mat(&i).done(),
        ];
        let g1 = self.func.g().value(1.0);
        let start = &basis[0] * (g1 + 1.0) + &basis[1] + &basis[2];
        central_point(self, &basis, start)
    }
}
