use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::epigraph::{EpiCore, Epigraph};
use super::util::{herm, identity, logdet, mdim, sandwich, Packer, Reader};
use super::ConeError;
use crate::linalg::{cholesky_retry, hadamard, hadamard_div, herm_part, Block, Eig, Layout, PdFactor, Scalar, ScalarFn};
use crate::linalg::divided_diff_first;

/// Linear map `G` of the key-distribution cone.
#[derive(Debug, Clone, PartialEq)]
pub enum GInfo {
    /// `G(X) = X` on `n x n` matrices.
    Identity(usize),
    /// `G(X) = sum K X K^†`.
    Kraus(Vec<DMatrix<Complex64>>),
}

/// Pinching map `Z` of the key-distribution cone.
#[derive(Debug, Clone, PartialEq)]
pub enum ZInfo {
    /// `r` equal diagonal blocks.
    Blocks(usize),
    /// Pinch the listed subsystems of a tensor product with the given dimensions.
    Subsystems { dims: Vec<usize>, sys: Vec<usize> },
    /// Explicit 0/1 diagonal projectors that are mutually orthogonal and sum to the identity.
    Kraus(Vec<DMatrix<Complex64>>),
}

/// `closure{(t, X) : t >= -S(G(X)) + S(Z(G(X)))}`; barrier parameter `1 + n`.
pub type QuantKeyDist<T> = Epigraph<QkdCore<T>>;

fn index_sets(z: &ZInfo, m: usize) -> Result<Vec<Vec<usize>>, ConeError> {
    let bad = |s: String| Err(ConeError::InvalidParams(s));
    match z {
        ZInfo::Blocks(r) => {
            if *r == 0 || m % r != 0 {
                return bad(format!("{r} blocks do not divide dimension {m}"));
            }
            let k = m / r;
            Ok((0..*r).map(|b| (b * k..(b + 1) * k).collect()).collect())
        }
        ZInfo::Subsystems { dims, sys } => {
            if dims.iter().product::<usize>() != m || dims.contains(&0) {
                return bad(format!("subsystem dims {dims:?} do not match dimension {m}"));
            }
            if sys.is_empty() || sys.iter().any(|&s| s >= dims.len()) {
                return bad(format!("invalid pinched subsystems {sys:?}"));
            }
            let mut groups: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
            for idx in 0..m {
                let mut rem = idx;
                let mut digits = vec![0; dims.len()];
                for k in (0..dims.len()).rev() {
                    digits[k] = rem % dims[k];
                    rem /= dims[k];
                }
                let key: Vec<usize> = sys.iter().map(|&s| digits[s]).collect();
                groups.entry(key).or_default().push(idx);
            }
            Ok(groups.into_values().collect())
        }
        ZInfo::Kraus(ops) => {
            let mut owner = vec![usize::MAX; m];
            let mut sets = Vec::new();
            for (b, z) in ops.iter().enumerate() {
                if z.nrows() != m || z.ncols() != m {
                    return bad(format!("pinching operator {b} is not {m}x{m}"));
                }
                let mut set = Vec::new();
                for i in 0..m {
                    for j in 0..m {
                        let v = z[(i, j)];
                        let ok = if i == j { v == Complex64::new(0.0, 0.0) || v == Complex64::new(1.0, 0.0) } else { v.norm() == 0.0 };
                        if !ok {
                            return bad(format!("pinching operator {b} must be diagonal with 0/1 entries"));
                        }
                    }
                    if z[(i, i)].re == 1.0 {
                        if owner[i] != usize::MAX {
                            return bad(format!("pinching operators {} and {b} overlap", owner[i]));
                        }
                        owner[i] = b;
                        set.push(i);
                    }
                }
                if !set.is_empty() {
                    sets.push(set);
                }
            }
            if owner.contains(&usize::MAX) {
                return bad("pinching operators must sum to the identity".into());
            }
            Ok(sets)
        }
    }
}

fn convert<T: Scalar>(m: &DMatrix<Complex64>) -> Result<DMatrix<T>, ConeError> {
    if !T::IS_COMPLEX && m.iter().any(|v| v.im != 0.0) {
        return Err(ConeError::InvalidParams("complex Kraus operator on a real cone".into()));
    }
    Ok(m.map(|v| T::from_parts(v.re, v.im)))
}

impl<T: Scalar> QuantKeyDist<T> {
    pub fn new(g: GInfo, z: ZInfo) -> Result<Self, ConeError> {
        let (n, m, kraus) = match &g {
            GInfo::Identity(n) => (*n, *n, None),
            GInfo::Kraus(ks) => {
                let Some(k0) = ks.first() else {
                    return Err(ConeError::InvalidParams("empty Kraus list".into()));
                };
                let (m, n) = k0.shape();
                if ks.iter().any(|k| k.shape() != (m, n)) {
                    return Err(ConeError::InvalidParams("Kraus operators differ in shape".into()));
                }
                let ks = ks.iter().map(convert::<T>).collect::<Result<Vec<_>, _>>()?;
                (n, m, Some(ks))
            }
        };
        if n == 0 {
            return Err(ConeError::InvalidParams("dimension must be positive".into()));
        }
        let blocks = index_sets(&z, m)?;
        let zlayout = Layout::new(blocks.iter().map(|b| Block::Herm { n: b.len(), complex: T::IS_COMPLEX }).collect());
        Ok(Epigraph::from_core(QkdCore {
            n,
            m,
            kraus,
            blocks,
            zlayout,
            ex: None,
            eg: None,
            ez: Vec::new(),
            x_inv: DMatrix::zeros(n, n),
            d1x: DMatrix::zeros(n, n),
            d1g: DMatrix::zeros(m, m),
            d1z: Vec::new(),
            f: 0.0,
            logdet: 0.0,
            gf: DVector::zeros(mdim::<T>(n)),
            fac: None,
        }))
    }
}

pub struct QkdCore<T: Scalar> {
    n: usize,
    m: usize,
    kraus: Option<Vec<DMatrix<T>>>,
    blocks: Vec<Vec<usize>>,
    zlayout: Layout,
    ex: Option<Eig<T>>,
    eg: Option<Eig<T>>,
    ez: Vec<Eig<T>>,
    x_inv: DMatrix<T>,
    d1x: DMatrix<f64>,
    d1g: DMatrix<f64>,
    d1z: Vec<DMatrix<f64>>,
    f: f64,
    logdet: f64,
    gf: DVector<f64>,
    fac: Option<(f64, DMatrix<f64>, PdFactor)>,
}

impl<T: Scalar> QkdCore<T> {
    fn g(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match &self.kraus {
            None => x.clone(),
            Some(ks) => herm_part(&ks.iter().fold(DMatrix::zeros(self.m, self.m), |acc, k| acc + k * x * k.adjoint())),
        }
    }

    fn g_adj(&self, y: &DMatrix<T>) -> DMatrix<T> {
        match &self.kraus {
            None => y.clone(),
            Some(ks) => herm_part(&ks.iter().fold(DMatrix::zeros(self.n, self.n), |acc, k| acc + k.adjoint() * y * k)),
        }
    }

    fn pinch(&self, y: &DMatrix<T>) -> Vec<DMatrix<T>> {
        self.blocks.iter().map(|b| DMatrix::from_fn(b.len(), b.len(), |i, j| y[(b[i], b[j])])).collect()
    }

    fn embed(&self, parts: &[DMatrix<T>]) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for (b, p) in self.blocks.iter().zip(parts) {
            for i in 0..b.len() {
                for j in 0..b.len() {
                    out[(b[i], b[j])] = p[(i, j)];
                }
            }
        }
        out
    }

    fn parts_from(&self, v: &[f64]) -> Vec<DMatrix<T>> {
        let mut r = Reader::new(v);
        self.blocks.iter().map(|b| r.mat(b.len())).collect()
    }

    fn parts_vec(&self, parts: &[DMatrix<T>]) -> DVector<f64> {
        parts.iter().fold(Packer::new(0), |p, m| p.mat(m)).done()
    }

    fn dlog_g(&self, v: &DMatrix<T>) -> DMatrix<T> {
        let e = self.eg.as_ref().unwrap();
        e.from_basis(&hadamard(&self.d1g, &e.to_basis(v)))
    }

    fn dlog_z(&self, parts: &[DMatrix<T>], inverse: bool) -> Vec<DMatrix<T>> {
        parts
            .iter()
            .zip(self.ez.iter().zip(&self.d1z))
            .map(|(p, (e, d))| {
                let t = e.to_basis(p);
                e.from_basis(&if inverse { hadamard_div(d, &t) } else { hadamard(d, &t) })
            })
            .collect()
    }

    fn hess_f_mat(&self, dx: &DMatrix<T>) -> DMatrix<T> {
        let gd = self.g(dx);
        let a = self.dlog_g(&gd);
        let b = self.embed(&self.dlog_z(&self.pinch(&gd), false));
        self.g_adj(&(a - b))
    }
}

impl<T: Scalar> EpiCore for QkdCore<T> {
    fn name(&self) -> &'static str {
        "quant_key_dist"
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
        self.eg = None;
        self.ez.clear();
        self.fac = None;
        let Ok(ex) = Eig::new(&x) else { return false };
        if ex.min() <= 0.0 {
            return false;
        }
        let gx = self.g(&x);
        let Ok(eg) = Eig::new(&gx) else { return false };
        if eg.min() <= 0.0 {
            return false;
        }
        let mut ez = Vec::with_capacity(self.blocks.len());
        for p in self.pinch(&gx) {
            match Eig::new(&p) {
                Ok(e) if e.min() > 0.0 => ez.push(e),
                _ => return false,
            }
        }
        let ent = |lam: &DVector<f64>| lam.iter().map(|l| l * l.ln()).sum::<f64>();
        self.f = ent(&eg.lam) - ez.iter().map(|e| ent(&e.lam)).sum::<f64>();
        self.logdet = logdet(&ex.lam);
        let logz: Vec<DMatrix<T>> = ez.iter().map(|e| e.apply(f64::ln)).collect();
        let inner = eg.apply(f64::ln) - self.embed(&logz);
        self.d1x = divided_diff_first(ScalarFn::Log, &ex.lam).expect("positive spectrum");
        self.d1g = divided_diff_first(ScalarFn::Log, &eg.lam).expect("positive spectrum");
        self.d1z = ez.iter().map(|e| divided_diff_first(ScalarFn::Log, &e.lam).expect("positive spectrum")).collect();
        self.x_inv = ex.apply(|l| 1.0 / l);
        self.ex = Some(ex);
        self.eg = Some(eg);
        self.ez = ez;
        self.gf = Packer::new(self.gf.len()).mat(&self.g_adj(&inner)).done();
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
        Packer::new(d.len()).mat(&self.hess_f_mat(&dx)).done()
    }

    fn hess_b_prod(&mut self, d: &[f64]) -> DVector<f64> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        Packer::new(d.len()).mat(&sandwich(&self.x_inv, &dx)).done()
    }

    fn solve_m(&mut self, zeta: f64, rv: &[f64]) -> Result<DVector<f64>, ConeError> {
        let n = self.n;
        let ex = self.ex.as_ref().unwrap();
        let lx = &ex.lam;
        let hh = DMatrix::from_fn(n, n, |i, j| self.d1x[(i, j)] / zeta + 1.0 / (lx[i] * lx[j]));
        let hinv = |v: &DMatrix<T>| ex.from_basis(&hadamard_div(&hh, &ex.to_basis(v)));
        let r: DMatrix<T> = Reader::new(rv).mat(n);
        if self.kraus.is_none() {
            // M = Hh - Z^T (Dlog(Z X) / zeta) Z, inverted through the block-diagonal core
            if !matches!(&self.fac, Some((z, _, _)) if *z == zeta) {
                let core = self.zlayout.assemble(|e| {
                    let parts = self.parts_from(e.as_slice());
                    let a: Vec<DMatrix<T>> = self.dlog_z(&parts, true).into_iter().map(|m| m * T::lift(zeta)).collect();
                    let b = self.pinch(&hinv(&self.embed(&parts)));
                    let diff: Vec<DMatrix<T>> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                    self.parts_vec(&diff)
                });
                let fac = cholesky_retry(&core).map_err(|_| ConeError::Numerical("quant_key_dist core"))?;
                self.fac = Some((zeta, core, fac));
            }
            let (_, _, fac) = self.fac.as_ref().unwrap();
            let h_r = hinv(&r);
            let zr = self.zlayout.to_compact(self.parts_vec(&self.pinch(&h_r)).as_slice());
            let w = self.zlayout.from_compact(fac.solve(&zr).as_slice());
            let out = h_r + hinv(&self.embed(&self.parts_from(w.as_slice())));
            return Ok(Packer::new(rv.len()).mat(&out).done());
        }
        let layout = Layout::new(self.blocks());
        if !matches!(&self.fac, Some((z, _, _)) if *z == zeta) {
            let x_inv = self.x_inv.clone();
            let m = layout.assemble(|e| {
                let dx: DMatrix<T> = herm(e.as_slice(), n);
                let h = self.hess_f_mat(&dx) * T::lift(1.0 / zeta) + sandwich(&x_inv, &dx);
                Packer::new(e.len()).mat(&h).done()
            });
            let fac = cholesky_retry(&m).map_err(|_| ConeError::Numerical("quant_key_dist hessian"))?;
            self.fac = Some((zeta, m, fac));
        }
        let (_, _, fac) = self.fac.as_ref().unwrap();
        let x = fac.solve(&layout.to_compact(rv));
        Ok(layout.from_compact(x.as_slice()))
    }

    fn third_b(&mut self, d: &[f64]) -> DVector<f64> {
        let dx: DMatrix<T> = Reader::new(d).mat(self.n);
        Packer::new(d.len()).mat(&super::util::logdet_third(&self.x_inv, &dx)).done()
    }

    fn init_span(&self) -> Vec<DVector<f64>> {
        vec![Packer::new(0).mat(&identity::<T>(self.n)).done()]
    }

    fn custom_init(&mut self) -> Option<DVector<f64>> {
        let i = Packer::new(0).mat(&identity::<T>(self.n)).done();
        assert!(self.set_u(i.as_slice()), "identity must be interior");
        Some(Packer::new(0).scalar(self.f + 1.0).slice(i.as_slice()).done())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;

    #[test]
    fn diagonal_point_is_fixed_by_full_pinching() {
        let mut c = QuantKeyDist::<f64>::new(GInfo::Identity(3), ZInfo::Blocks(3)).unwrap();
        let x = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 1.0, 2.0]));
        let s = Packer::new(0).scalar(1e-3).mat(&x).done();
        assert!(c.set_point(s.as_slice()));
        assert!(c.f_value().abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_pinching() {
        let mut z = DMatrix::<Complex64>::zeros(2, 2);
        z[(0, 0)] = Complex64::new(0.5, 0.0);
        assert!(QuantKeyDist::<f64>::new(GInfo::Identity(2), ZInfo::Kraus(vec![z])).is_err());
        let mut z1 = DMatrix::<Complex64>::zeros(2, 2);
        z1[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(QuantKeyDist::<f64>::new(GInfo::Identity(2), ZInfo::Kraus(vec![z1.clone()])).is_err());
        let mut z2 = DMatrix::<Complex64>::zeros(2, 2);
        z2[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(QuantKeyDist::<f64>::new(GInfo::Identity(2), ZInfo::Kraus(vec![z1, z2])).is_ok());
    }

    #[test]
    fn subsystem_pinching_groups() {
        let sets = index_sets(&ZInfo::Subsystems { dims: vec![2, 2], sys: vec![1] }, 4).unwrap();
        assert_eq!(sets, vec![vec![0, 2], vec![1, 3]]);
        let sets = index_sets(&ZInfo::Subsystems { dims: vec![2, 2], sys: vec![0] }, 4).unwrap();
        assert_eq!(sets, vec![vec![0, 1], vec![2, 3]]);
    }
}
