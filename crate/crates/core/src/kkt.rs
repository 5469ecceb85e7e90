//! Newton system of the homogeneous embedding, solved by block elimination.
//!
//! The system in `(dx, dy, dz, ds, dtau, dkappa)` is
//!
//! ```text
//!  A^T dy + G^T dz + c dtau          = rx
//! -A dx + b dtau                     = ry
//! -G dx + h dtau - ds                = rz
//! -c^T dx - b^T dy - h^T dz - dkappa = rtau
//!  dz + H ds                         = rs
//!  tau dkappa + kappa dtau           = rkappa
//! ```
//!
//! where `H` is `mu * hess F(s)` or the Nesterov-Todd scaling `hess F(w)`.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::cones::{ConeError, ConeSet};
use crate::linalg::{cholesky_retry, PdFactor};
use crate::model::{ConeMatrix, Model, Point};

#[derive(Debug, Error)]
pub enum KktError {
    #[error("normal equations are not positive definite")]
    Factorization,
    #[error("degenerate Newton direction (denominator {0:.3e})")]
    Degenerate(f64),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Which Hessian operator stands in for `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HessMode {
    /// `hess F(w)` at the Nesterov-Todd scaling point.
    Nt,
    /// `mu * hess F(s)` at the loaded point.
    Barrier { mu: f64 },
}

/// Elimination path chosen at factorization time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktPath {
    /// `G = -I`: normal matrix `A H^{-1} A^T`.
    IdentityG,
    /// `G = -I` with NT scaling: orthogonal factorization of `W A^T`, which
    /// keeps the primal equations accurate without refinement.
    ScaledQr,
    /// Normal matrices `G^T H G` and `A (G^T H G)^{-1} A^T`.
    General,
    /// `G^T H G + A^T A` when `G^T H G` is singular.
    Modified,
}

/// Right-hand side of the Newton system.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonRhs {
    pub rx: DVector<f64>,
    pub ry: DVector<f64>,
    pub rz: DVector<f64>,
    pub rtau: f64,
    pub rs: DVector<f64>,
    pub rkappa: f64,
}

impl NewtonRhs {
    pub fn zeros(n: usize, p: usize, q: usize) -> Self {
        Self {
            rx: DVector::zeros(n),
            ry: DVector::zeros(p),
            rz: DVector::zeros(q),
            rtau: 0.0,
            rs: DVector::zeros(q),
            rkappa: 0.0,
        }
    }

    pub fn norm_inf(&self) -> f64 {
        [self.rx.amax(), self.ry.amax(), self.rz.amax(), self.rtau.abs(), self.rs.amax(), self.rkappa.abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn sub(&self, o: &NewtonRhs) -> NewtonRhs {
        NewtonRhs {
            rx: &self.rx - &o.rx,
            ry: &self.ry - &o.ry,
            rz: &self.rz - &o.rz,
            rtau: self.rtau - o.rtau,
            rs: &self.rs - &o.rs,
            rkappa: self.rkappa - o.rkappa,
        }
    }
}

/// Cached factorizations at one iterate.
pub struct Kkt {
    path: KktPath,
    mode: HessMode,
    tau: f64,
    kappa: f64,
    /// `G^T H G` (or `G^T H G + A^T A`) for the general paths.
    k_fac: Option<PdFactor>,
    /// `H G` for the general paths.
    hg: Option<DMatrix<f64>>,
    /// y-block normal matrix.
    n_fac: Option<PdFactor>,
    /// Thin `Q, R` with `W A^T = Q R` for the scaled path.
    qr: Option<(DMatrix<f64>, DMatrix<f64>)>,
    /// `(dx, dy, dz)` for the right-hand side `(c, b, H h)`.
    sol2: (DVector<f64>, DVector<f64>, DVector<f64>),
    refine: bool,
}

fn h_apply(cones: &mut ConeSet, mode: HessMode, v: &DVector<f64>) -> DVector<f64> {
    match mode {
        HessMode::Nt => cones.nt_hess_prod(v.as_slice()),
        HessMode::Barrier { mu } => cones.hess_prod(v.as_slice()) * mu,
    }
}

fn h_inv_apply(cones: &mut ConeSet, mode: HessMode, v: &DVector<f64>) -> Result<DVector<f64>, ConeError> {
    match mode {
        HessMode::Nt => Ok(cones.nt_inv_hess_prod(v.as_slice())),
        HessMode::Barrier { mu } => Ok(cones.inv_hess_prod(v.as_slice())? / mu),
    }
}

/// `H G` column by column.
pub fn hess_times_g(cones: &mut ConeSet, mode: HessMode, g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut hg = DMatrix::zeros(g.nrows(), g.ncols());
    for j in 0..g.ncols() {
        let col = h_apply(cones, mode, &g.column(j).into_owned());
        hg.set_column(j, &col);
    }
    hg
}

/// `G^T H G`, symmetrized.
pub fn gram(cones: &mut ConeSet, mode: HessMode, g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let hg = hess_times_g(cones, mode, g);
    let k = g.tr_mul(&hg);
    ((&k + k.transpose()) * 0.5, hg)
}

/// A symmetric matrix stored as its nonzero entries, both triangles included.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// Symmetric part of a row-stacked `n x n` vector, dropping zeros.
    pub fn from_vec(n: usize, v: &[f64]) -> Self {
        let mut entries = vec![];
        for a in 0..n {
            for b in 0..n {
                let x = 0.5 * (v[a * n + b] + v[b * n + a]);
                if x != 0.0 {
                    entries.push((a, b, x));
                }
            }
        }
        Self { n, entries }
    }

    /// Diagonal matrix from a vector.
    pub fn diagonal(v: &[f64]) -> Self {
        let entries = v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i, i, x)).collect();
        Self { n: v.len(), entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(a, b, x) in &self.entries {
            m[(a, b)] += x;
        }
        m
    }

    /// `X (A X)` with the inner product formed from the nonzeros.
    fn sandwich(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut ax = DMatrix::zeros(self.n, self.n);
        for &(a, b, v) in &self.entries {
            for c in 0..self.n {
                ax[(a, c)] += v * x[(b, c)];
            }
        }
        x * ax
    }
}

/// `M_ij = tr(A_i X A_j X)` by dense products.
pub fn assemble_schur_dense(rows: &[SparseSym], x: &DMatrix<f64>) -> DMatrix<f64> {
    let dense: Vec<DMatrix<f64>> = rows.iter().map(SparseSym::to_dense).collect();
    let m = rows.len();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let y = x * &dense[j] * x;
        for i in 0..=j {
            let v = dense[i].dot(&y);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `M_ij = tr(A_i X A_j X)` exploiting sparsity of the rows.
///
/// Rows are visited from densest to sparsest (stable for ties). A dense row
/// `A_i` (more than `n` nonzeros) forms `X A_i X` once and pairs with every
/// later row through its nonzeros; two sparse rows pair entrywise.
pub fn assemble_schur_sparse(rows: &[SparseSym], x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = rows.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(rows[i].nnz()));
    let mut out = DMatrix::zeros(m, m);
    for (k, &i) in order.iter().enumerate() {
        let ai = &rows[i];
        if ai.nnz() > ai.n {
            let y = ai.sandwich(x);
            for &j in &order[k..] {
                let v: f64 = rows[j].entries.iter().map(|&(a, b, w)| w * y[(b, a)]).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        } else {
            for &j in &order[k..] {
                let mut v = 0.0;
                for &(a, b, wi) in &ai.entries {
                    for &(c, d, wj) in &rows[j].entries {
                        v += wi * x[(b, c)] * wj * x[(d, a)];
                    }
                }
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
    }
    (&out + out.transpose()) * 0.5
}

/// `A H^{-1} A^T` from Nesterov-Todd scaling matrices, one block per cone.
fn schur_from_scalings(model: &Model, cones: &ConeSet, xs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = model.p();
    let mut out = DMatrix::zeros(p, p);
    for (ci, x) in xs.iter().enumerate() {
        let r = cones.range(ci);
        let n = x.nrows();
        let diag = r.len() == n;
        let rows: Vec<SparseSym> = (0..p)
            .map(|i| {
                let v: Vec<f64> = model.a.row(i).columns(r.start, r.len()).iter().cloned().collect();
                if diag {
                    SparseSym::diagonal(&v)
                } else {
                    SparseSym::from_vec(n, &v)
                }
            })
            .collect();
        out += assemble_schur_sparse(&rows, x);
    }
    out
}

/// Largest `q p^2` handled by the scaled path; beyond it the (sparse) normal
/// matrix is cheaper.
const SCALED_QR_WORK: usize = 50_000_000;

/// Factored `A H^{-1} A^T` for `G = -I`.
fn identity_schur(model: &Model, cones: &mut ConeSet, mode: HessMode, q: usize) -> Result<PdFactor, KktError> {
    let p = model.p();
    let scalings = if mode == HessMode::Nt { cones.nt_scaling_matrices() } else { None };
    let nmat = match scalings {
        Some(xs) => schur_from_scalings(model, cones, &xs),
        None => {
            let mut hinv_at = DMatrix::zeros(q, p);
            for i in 0..p {
                let col = h_inv_apply(cones, mode, &model.a.row(i).transpose())?;
                hinv_at.set_column(i, &col);
            }
            &model.a * hinv_at
        }
    };
    cholesky_retry(&nmat).map_err(|_| KktError::Factorization)
}

fn chol(m: &DMatrix<f64>) -> Option<PdFactor> {
    let sym = (m + m.transpose()) * 0.5;
    Cholesky::new(sym.clone())?;
    cholesky_retry(&sym).ok()
}

impl Kkt {
    /// Factors the normal equations at the loaded point. `tau`, `kappa` come from
    /// the current iterate.
    pub fn factor(model: &Model, cones: &mut ConeSet, mode: HessMode, tau: f64, kappa: f64, refine: bool) -> Result<Self, KktError> {
        Self::factor_with(model, cones, mode, tau, kappa, refine, false)
    }

    /// As [`Kkt::factor`]; `force_modified` skips straight to the modified equations.
    pub fn factor_with(
        model: &Model,
        cones: &mut ConeSet,
        mode: HessMode,
        tau: f64,
        kappa: f64,
        refine: bool,
        force_modified: bool,
    ) -> Result<Self, KktError> {
        Self::factor_impl(model, cones, mode, tau, kappa, refine, force_modified, SCALED_QR_WORK)
    }

    #[allow(clippy::too_many_arguments)]
    fn factor_impl(
        model: &Model,
        cones: &mut ConeSet,
        mode: HessMode,
        tau: f64,
        kappa: f64,
        refine: bool,
        force_modified: bool,
        qr_work: usize,
    ) -> Result<Self, KktError> {
        let mut kkt = Kkt {
            path: KktPath::IdentityG,
            mode,
            tau,
            kappa,
            k_fac: None,
            hg: None,
            n_fac: None,
            qr: None,
            sol2: (DVector::zeros(0), DVector::zeros(0), DVector::zeros(0)),
            refine,
        };
        let p = model.p();
        match &model.g {
            ConeMatrix::NegIdentity(q) if mode == HessMode::Nt && p > 0 && *q * p * p <= qr_work => {
                let mut bt = DMatrix::zeros(*q, p);
                for i in 0..p {
                    bt.set_column(i, &cones.w_prod(model.a.row(i).transpose().as_slice()));
                }
                let qr = bt.qr();
                let r = qr.r();
                let d = r.diagonal().abs();
                if d.min() > 1e-13 * d.max() {
                    kkt.path = KktPath::ScaledQr;
                    kkt.qr = Some((qr.q(), r));
                } else {
                    kkt.n_fac = Some(identity_schur(model, cones, mode, *q)?);
                }
            }
            ConeMatrix::NegIdentity(q) => {
                kkt.n_fac = Some(identity_schur(model, cones, mode, *q)?);
            }
            ConeMatrix::Dense(g) => {
                let (k, hg) = gram(cones, mode, g);
                let plain = if force_modified { None } else { chol(&k) };
                let k_fac = match plain {
                    Some(f) => {
                        kkt.path = KktPath::General;
                        f
                    }
                    None => {
                        kkt.path = KktPath::Modified;
                        cholesky_retry(&(k + model.a.tr_mul(&model.a))).map_err(|_| KktError::Factorization)?
                    }
                };
                let kinv_at = k_fac.solve_mat(&model.a.transpose());
                kkt.n_fac = Some(cholesky_retry(&(&model.a * kinv_at)).map_err(|_| KktError::Factorization)?);
                kkt.k_fac = Some(k_fac);
                kkt.hg = Some(hg);
            }
        }
        let zero = DVector::zeros(model.q());
        kkt.sol2 = kkt.solve3(model, cones, &model.c, &model.b, &model.h, &zero)?;
        Ok(kkt)
    }

    pub fn path(&self) -> KktPath {
        self.path
    }

    /// Solves `A^T dy + G^T dz = bx`, `-A dx = by`, `-H G dx + dz = H rz + rs`.
    fn solve3(
        &self,
        model: &Model,
        cones: &mut ConeSet,
        bx: &DVector<f64>,
        by: &DVector<f64>,
        rz: &DVector<f64>,
        rs: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>), KktError> {
        let a = &model.a;
        if let Some((q, r)) = &self.qr {
            // dx = W^T u + rz, u = W v - Q k, R dy = k = t + Q^T W v, R^T t = by + A rz
            let wv = cones.w_prod((bx + rs).as_slice());
            let t = r.tr_solve_upper_triangular(&(by + a * rz)).ok_or(KktError::Factorization)?;
            let k = q.tr_mul(&wv) + t;
            let dy = r.solve_upper_triangular(&k).ok_or(KktError::Factorization)?;
            let u = wv - q * k;
            let dx = cones.w_t_prod(u.as_slice()) + rz;
            let dz = a.tr_mul(&dy) - bx;
            return Ok((dx, dy, dz));
        }
        let nf = self.n_fac.as_ref().expect("factored");
        match self.path {
            KktPath::IdentityG | KktPath::ScaledQr => {
                // H^{-1} (H rz) is never formed: it loses cond(H) digits near the boundary
                let hinv = h_inv_apply(cones, self.mode, &(bx + rs))? + rz;
                let dy = nf.solve(&(by + a * &hinv));
                let dx = h_inv_apply(cones, self.mode, &(bx - a.tr_mul(&dy) + rs))? + rz;
                let dz = a.tr_mul(&dy) - bx;
                Ok((dx, dy, dz))
            }
            KktPath::General | KktPath::Modified => {
                let kf = self.k_fac.as_ref().expect("factored");
                let hg = self.hg.as_ref().expect("factored");
                let bz = h_apply(cones, self.mode, rz) + rs;
                let bz = &bz;
                let r = bx - model.g.tr_mul(bz);
                let (dx, dy) = if self.path == KktPath::General {
                    let dy = nf.solve(&(by + a * kf.solve(&r)));
                    (kf.solve(&(&r - a.tr_mul(&dy))), dy)
                } else {
                    let r2 = &r - a.tr_mul(by);
                    let dy = nf.solve(&(by + a * kf.solve(&r2)));
                    (kf.solve(&(&r - a.tr_mul(&(by + &dy)))), dy)
                };
                let dz = bz + hg * &dx;
                Ok((dx, dy, dz))
            }
        }
    }

    fn solve_once(&self, model: &Model, cones: &mut ConeSet, r: &NewtonRhs) -> Result<Point, KktError> {
        let (x1, y1, z1) = self.solve3(model, cones, &r.rx, &r.ry, &r.rz, &r.rs)?;
        let (x2, y2, z2) = &self.sol2;
        let (tau, kappa) = (self.tau, self.kappa);
        let den = kappa / tau + model.c.dot(x2) + model.b.dot(y2) + model.h.dot(z2);
        if !(den.abs() >= 1e-14) {
            return Err(KktError::Degenerate(den));
        }
        let num = r.rtau + r.rkappa / tau + model.c.dot(&x1) + model.b.dot(&y1) + model.h.dot(&z1);
        let dtau = num / den;
        let dx = x1 - x2 * dtau;
        let dy = y1 - y2 * dtau;
        let dz = z1 - z2 * dtau;
        let ds = -model.g.mul(&dx) + &model.h * dtau - &r.rz;
        let dkappa = (r.rkappa - kappa * dtau) / tau;
        Ok(Point { x: dx, y: dy, z: dz, s: ds, tau: dtau, kappa: dkappa })
    }

    /// Applies the Newton operator to a direction.
    pub fn apply(&self, model: &Model, cones: &mut ConeSet, d: &Point) -> NewtonRhs {
        NewtonRhs {
            rx: model.a.tr_mul(&d.y) + model.g.tr_mul(&d.z) + &model.c * d.tau,
            ry: -(&model.a * &d.x) + &model.b * d.tau,
            rz: -model.g.mul(&d.x) + &model.h * d.tau - &d.s,
            rtau: -model.c.dot(&d.x) - model.b.dot(&d.y) - model.h.dot(&d.z) - d.kappa,
            rs: &d.z + h_apply(cones, self.mode, &d.s),
            rkappa: self.tau * d.kappa + self.kappa * d.tau,
        }
    }

    /// Relative residual `|K d - r|_inf / (1 + |r|_inf)`.
    pub fn residual(&self, model: &Model, cones: &mut ConeSet, r: &NewtonRhs, d: &Point) -> f64 {
        r.sub(&self.apply(model, cones, d)).norm_inf() / (1.0 + r.norm_inf())
    }

    /// Solves the Newton system, refining when enabled.
    pub fn solve(&self, model: &Model, cones: &mut ConeSet, r: &NewtonRhs) -> Result<Point, KktError> {
        let d = self.solve_once(model, cones, r)?;
        if self.refine {
            Ok(self.refine(model, cones, r, d, 3))
        } else {
            Ok(d)
        }
    }

    /// Up to `passes` residual corrections, each kept only if it lowers the residual.
    pub fn refine(&self, model: &Model, cones: &mut ConeSet, r: &NewtonRhs, mut d: Point, passes: usize) -> Point {
        let scale = 1.0 + r.norm_inf();
        let mut res = r.sub(&self.apply(model, cones, &d));
        let mut err = res.norm_inf() / scale;
        for _ in 0..passes {
            if err <= 1e-10 {
                break;
            }
            let Ok(corr) = self.solve_once(model, cones, &res) else { break };
            let cand = d.axpy(1.0, &corr);
            let cres = r.sub(&self.apply(model, cones, &cand));
            let cerr = cres.norm_inf() / scale;
            if cerr >= err {
                break;
            }
            d = cand;
            res = cres;
            err = cerr;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::ConeSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(rng: &mut ChaCha8Rng, explicit_g: bool) -> Model {
        let cones = vec![ConeSpec::NonNegOrthant { n: 2 }, ConeSpec::SecondOrder { n: 3 }];
        let (n, p) = (6, 2);
        let mut r = |k: usize| DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let c = r(n);
        let b = r(p);
        let h = r(n);
        let a = DMatrix::from_fn(p, n, |i, j| if (i + j) % 3 == 0 { 1.0 } else { 0.5 * (i as f64 - j as f64) });
        let g = explicit_g.then(|| -DMatrix::identity(n, n));
        let m = Model::new(c, a, b, g, Some(h), cones, 0.0).unwrap();
        crate::model::preprocess(&m).0
    }

    fn loaded(model: &Model) -> ConeSet {
        let mut cs = ConeSet::new(&model.cones).unwrap();
        let s = DVector::from_vec(vec![1.5, 0.7, 2.0, 0.3, 0.3, 1.0]);
        let z = DVector::from_vec(vec![0.4, 2.0, 1.0, -0.2, -0.2, 0.9]);
        assert!(cs.set_point(s.as_slice()));
        cs.nt_update(s.as_slice(), z.as_slice()).unwrap();
        cs
    }

    fn random_rhs(rng: &mut ChaCha8Rng, model: &Model) -> NewtonRhs {
        let mut r = |k: usize| DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let herm = |v: DVector<f64>| crate::model::hermitian_part(&model.cones, &v);
        NewtonRhs {
            rx: herm(r(model.n())),
            ry: r(model.p()),
            rz: herm(r(model.q())),
            rtau: 0.3,
            rs: herm(r(model.q())),
            rkappa: -0.2,
        }
    }

    #[test]
    fn zero_rhs_gives_zero_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_model(&mut rng, false);
        let mut cs = loaded(&m);
        let kkt = Kkt::factor(&m, &mut cs, HessMode::Nt, 1.2, 0.8, true).unwrap();
        let d = kkt.solve(&m, &mut cs, &NewtonRhs::zeros(6, 2, 6)).unwrap();
        assert_eq!(d.norm_inf(), 0.0);
    }

    #[test]
    fn all_paths_solve_the_full_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for mode in [HessMode::Nt, HessMode::Barrier { mu: 0.7 }] {
            let mi = random_model(&mut rng, false);
            let mut me = mi.clone();
            me.g = ConeMatrix::Dense(-DMatrix::identity(6, 6));
            let r = random_rhs(&mut rng, &mi);
            let mut cs = loaded(&mi);
            let ki = Kkt::factor(&mi, &mut cs, mode, 1.2, 0.8, false).unwrap();
            let kn = Kkt::factor_impl(&mi, &mut cs, mode, 1.2, 0.8, false, false, 0).unwrap();
            let ke = Kkt::factor(&me, &mut cs, mode, 1.2, 0.8, false).unwrap();
            let km = Kkt::factor_with(&me, &mut cs, mode, 1.2, 0.8, false, true).unwrap();
            let first = if mode == HessMode::Nt { KktPath::ScaledQr } else { KktPath::IdentityG };
            assert_eq!((ki.path(), kn.path(), ke.path(), km.path()), (first, KktPath::IdentityG, KktPath::General, KktPath::Modified));
            let de = ke.solve(&me, &mut cs, &r).unwrap();
            assert!(ke.residual(&me, &mut cs, &r, &de) < 1e-9);
            for (k, m) in [(&ki, &mi), (&kn, &mi), (&km, &me)] {
                let d = k.solve(m, &mut cs, &r).unwrap();
                assert!(k.residual(m, &mut cs, &r, &d) < 1e-9);
                assert!(d.axpy(-1.0, &de).norm_inf() < 1e-8);
            }
        }
    }

    #[test]
    fn matches_dense_kkt_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(&mut rng, false);
        let mut cs = loaded(&m);
        let (tau, kappa) = (1.2, 0.8);
        let kkt = Kkt::factor(&m, &mut cs, HessMode::Nt, tau, kappa, false).unwrap();
        let r = random_rhs(&mut rng, &m);
        let d = kkt.solve(&m, &mut cs, &r).unwrap();
        // assemble the full operator column by column and solve densely
        let (n, p, q) = (m.n(), m.p(), m.q());
        let dim = n + p + 2 * q + 2;
        let unpack = |v: &DVector<f64>| Point {
            x: v.rows(0, n).into_owned(),
            y: v.rows(n, p).into_owned(),
            z: v.rows(n + p, q).into_owned(),
            s: v.rows(n + p + q, q).into_owned(),
            tau: v[dim - 2],
            kappa: v[dim - 1],
        };
        let pack = |r: &NewtonRhs| {
            let mut v: Vec<f64> = vec![];
            v.extend(r.rx.iter());
            v.extend(r.ry.iter());
            v.extend(r.rz.iter());
            v.extend(r.rs.iter());
            v.push(r.rtau);
            v.push(r.rkappa);
            DVector::from_vec(v)
        };
        let mut k = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            k.set_column(j, &pack(&kkt.apply(&m, &mut cs, &unpack(&e))));
        }
        let dense = unpack(&k.lu().solve(&pack(&r)).unwrap());
        assert!(d.axpy(-1.0, &dense).norm_inf() < 1e-9);
    }

    #[test]
    fn refinement_repairs_a_perturbed_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_model(&mut rng, false);
        let mut cs = loaded(&m);
        let kkt = Kkt::factor(&m, &mut cs, HessMode::Nt, 1.0, 1.0, true).unwrap();
        let r = random_rhs(&mut rng, &m);
        let exact = kkt.solve(&m, &mut cs, &r).unwrap();
        let same = kkt.refine(&m, &mut cs, &r, exact.clone(), 3);
        assert!(same.axpy(-1.0, &exact).norm_inf() < 1e-12);
        let mut bad = exact.clone();
        bad.x[0] += 1e-3;
        let before = kkt.residual(&m, &mut cs, &r, &bad);
        let fixed = kkt.refine(&m, &mut cs, &r, bad, 3);
        assert!(kkt.residual(&m, &mut cs, &r, &fixed) <= before / 10.0);
    }

    #[test]
    fn schur_small_example() {
        let a1 = SparseSym { n: 2, entries: vec![(0, 0, 1.0)] };
        let a2 = SparseSym { n: 2, entries: vec![(0, 1, 1.0), (1, 0, 1.0)] };
        let x = DMatrix::identity(2, 2);
        let m = assemble_schur_sparse(&[a1.clone(), a2.clone()], &x);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        assert_eq!(assemble_schur_dense(&[a1, a2], &x), m);
    }

    #[test]
    fn identity_h_gives_aat() {
        let cones = vec![ConeSpec::PosSemidefinite { n: 2, complex: false }];
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let m = Model::new(DVector::zeros(4), a.clone(), DVector::zeros(2), None, None, cones, 0.0).unwrap();
        let mut cs = ConeSet::new(&m.cones).unwrap();
        let i = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        cs.set_point(i.as_slice());
        cs.nt_update(i.as_slice(), i.as_slice()).unwrap();
        let xs = cs.nt_scaling_matrices().unwrap();
        let nmat = schur_from_scalings(&m, &cs, &xs);
        assert!((nmat - &a * a.transpose()).amax() < 1e-14);
    }

    #[test]
    fn scaling_schur_matches_inverse_hessian_products() {
        let cones = vec![ConeSpec::NonNegOrthant { n: 2 }, ConeSpec::PosSemidefinite { n: 3, complex: false }];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(4, 11, |_, _| if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 });
        let m = Model::new(DVector::zeros(11), a, DVector::zeros(4), None, None, cones, 0.0).unwrap();
        let m = crate::model::preprocess(&m).0;
        let mut cs = ConeSet::new(&m.cones).unwrap();
        let s = DVector::from_vec(vec![1.5, 0.7, 2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
        let z = DVector::from_vec(vec![0.4, 2.0, 1.0, -0.2, 0.0, -0.2, 0.9, 0.3, 0.0, 0.3, 0.7]);
        cs.set_point(s.as_slice());
        cs.nt_update(s.as_slice(), z.as_slice()).unwrap();
        let xs = cs.nt_scaling_matrices().unwrap();
        let fast = schur_from_scalings(&m, &cs, &xs);
        let mut slow = DMatrix::zeros(4, 4);
        for j in 0..4 {
            let col = cs.nt_inv_hess_prod(m.a.row(j).transpose().as_slice());
            slow.set_column(j, &(&m.a * col));
        }
        assert!((&fast - &slow).amax() < 1e-12 * (1.0 + slow.amax()));
    }
}
