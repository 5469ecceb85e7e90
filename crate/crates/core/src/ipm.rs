//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Symmetric cone products use Nesterov-Todd predictor-corrector steps; any
//! nonsymmetric cone switches to the combined predictor/centering stepper with
//! optional third-order adjustments and a proximity-based line search.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cones::{ConeError, ConeSet};
use crate::kkt::{gram, HessMode, Kkt, KktError, KktPath, NewtonRhs};
use crate::linalg::cholesky_retry;
use crate::model::{
    eliminate_h, full_column_rank, hermitian_part, initial_point, preprocess, repair_s0_image, ConeMatrix, Model,
    Point, PreprocessState, Recovered,
};

const ETA: f64 = 0.99;
const ALPHA_MIN: f64 = 1e-4;
const BACKTRACK: f64 = 0.8;
const NT_STEP: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub max_iter: usize,
    /// Seconds.
    pub max_time: f64,
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub tol_infeas: f64,
    pub tol_ip: f64,
    pub tol_near: f64,
    /// 0 silent, 1 summaries, 2 per-iteration table, 3 stepper internals.
    pub verbose: u8,
    pub ir: bool,
    pub toa: bool,
    /// Starting iterate in the coordinates of the original model.
    pub init_pnt: Option<Point>,
    /// `None` decides automatically; `Some(false)` avoids inverse Hessian products.
    pub use_invhess: Option<bool>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            max_time: 3600.0,
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            tol_infeas: 1e-12,
            tol_ip: 1e-13,
            tol_near: 1000.0,
            verbose: 2,
            ir: true,
            toa: true,
            init_pnt: None,
            use_invhess: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolStatus {
    Optimal,
    NearOptimal,
    PrimalInfeasible,
    DualInfeasible,
    NearPrimalInfeasible,
    NearDualInfeasible,
    IllPosed,
    Unknown,
}

impl SolStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolStatus::Optimal => "optimal",
            SolStatus::NearOptimal => "near_optimal",
            SolStatus::PrimalInfeasible => "primal_infeasible",
            SolStatus::DualInfeasible => "dual_infeasible",
            SolStatus::NearPrimalInfeasible => "near_primal_infeasible",
            SolStatus::NearDualInfeasible => "near_dual_infeasible",
            SolStatus::IllPosed => "ill_posed",
            SolStatus::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SolStatus::Optimal,
            SolStatus::NearOptimal,
            SolStatus::PrimalInfeasible,
            SolStatus::DualInfeasible,
            SolStatus::NearPrimalInfeasible,
            SolStatus::NearDualInfeasible,
            SolStatus::IllPosed,
            SolStatus::Unknown,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }

    /// Optimal or a certified infeasibility, exact or near.
    pub fn is_certified(self) -> bool {
        !matches!(self, SolStatus::Unknown | SolStatus::IllPosed)
    }
}

impl fmt::Display for SolStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Solved,
    MaxIter,
    MaxTime,
    NumericalFailure,
}

impl ExitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitStatus::Solved => "solved",
            ExitStatus::MaxIter => "max_iter",
            ExitStatus::MaxTime => "max_time",
            ExitStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ExitStatus::Solved, ExitStatus::MaxIter, ExitStatus::MaxTime, ExitStatus::NumericalFailure]
            .into_iter()
            .find(|v| v.as_str() == s)
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    NesterovTodd,
    Combined,
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub mu: f64,
    pub alpha: f64,
    pub tau: f64,
    pub kappa: f64,
    /// Largest proximity value of the accepted iterate (combined stepper only).
    pub proximity: f64,
    /// Largest relative Newton residual over the systems solved this iteration.
    pub newton_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub stepper: Stepper,
    /// True when the inverse-Hessian-free formulation was used.
    pub invhess_avoided: bool,
    pub kkt_path: Option<KktPath>,
    pub inv_hess_calls_init: usize,
    pub inv_hess_calls_after_init: usize,
    pub history: Vec<IterRecord>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_opt: DVector<f64>,
    pub y_opt: DVector<f64>,
    pub z_opt: DVector<f64>,
    pub s_opt: DVector<f64>,
    pub sol_status: SolStatus,
    pub exit_status: ExitStatus,
    pub num_iter: usize,
    pub solve_time: f64,
    pub p_obj: f64,
    pub d_obj: f64,
    pub opt_gap: f64,
    pub p_feas: f64,
    pub d_feas: f64,
    pub stats: SolveStats,
}

/// Termination quantities of an iterate, measured on the original model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures {
    pub p_obj: f64,
    pub d_obj: f64,
    /// Left side of the gap test divided by its right side (without `eps_g`).
    pub opt_gap: f64,
    pub p_feas: f64,
    pub d_feas: f64,
    /// `|A^T y + G^T z|_inf / -(b^T y + h^T z)`, or infinity.
    pub p_infeas: f64,
    /// `max(|A x|_inf, |G x + s|_inf) / -c^T x`, or infinity.
    pub d_infeas: f64,
    /// Residual norm over iterate norm.
    pub ill_posed: f64,
}

/// Evaluates the termination tests on the original model for raw embedding
/// quantities `(x, y, z, s, tau)`.
pub fn measure(m: &Model, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, s: &DVector<f64>, tau: f64) -> Measures {
    let cx = m.c.dot(x);
    let byhz = m.b.dot(y) + m.h.dot(z);
    let aty_gtz = m.a.tr_mul(y) + m.g.tr_mul(z);
    let ax = &m.a * x;
    // the cones only see the Hermitian part of their slice
    let gxs = hermitian_part(&m.cones, &(m.g.mul(x) + s));
    let dres = &m.c + &aty_gtz / tau;
    let dres = if m.g.is_neg_identity() { hermitian_part(&m.cones, &dres) } else { dres };
    let gap_lhs = (s.dot(z) / tau).min((cx + byhz).abs());
    let gap_rhs = tau.max(cx.abs().min(byhz.abs()) / tau);
    let d_feas = dres.amax() / (1.0 + m.c.amax());
    let pa = (&m.b - &ax / tau).amax() / (1.0 + m.b.amax());
    let pg = (hermitian_part(&m.cones, &m.h) - &gxs / tau).amax() / (1.0 + m.h.amax());
    let ratio = |num: f64, den: f64| if den < 0.0 { num / -den } else { f64::INFINITY };
    let res = aty_gtz.amax().max(ax.amax()).max(gxs.amax());
    let size = x.amax().max(y.amax()).max(z.amax());
    Measures {
        p_obj: cx / tau + m.offset,
        d_obj: -byhz / tau + m.offset,
        opt_gap: gap_lhs / gap_rhs,
        p_feas: pa.max(pg),
        d_feas,
        p_infeas: ratio(aty_gtz.amax(), byhz),
        d_infeas: ratio(ax.amax().max(gxs.amax()), cx),
        ill_posed: if size > 0.0 { res / size } else { f64::INFINITY },
    }
}

/// Status certified by `ms` at tolerance multiplier `k`, if any.
pub fn classify(ms: &Measures, st: &SolverSettings, k: f64) -> Option<SolStatus> {
    let near = k > 1.0;
    if ms.opt_gap <= k * st.tol_gap && ms.p_feas <= k * st.tol_feas && ms.d_feas <= k * st.tol_feas {
        return Some(if near { SolStatus::NearOptimal } else { SolStatus::Optimal });
    }
    if ms.p_infeas <= k * st.tol_infeas {
        return Some(if near { SolStatus::NearPrimalInfeasible } else { SolStatus::PrimalInfeasible });
    }
    if ms.d_infeas <= k * st.tol_infeas {
        return Some(if near { SolStatus::NearDualInfeasible } else { SolStatus::DualInfeasible });
    }
    if !near && ms.ill_posed <= st.tol_ip {
        return Some(SolStatus::IllPosed);
    }
    None
}

/// `L(omega)`: the first four block rows of the embedding at `pt`.
fn hsde_residual(m: &Model, pt: &Point) -> NewtonRhs {
    NewtonRhs {
        rx: m.a.tr_mul(&pt.y) + m.g.tr_mul(&pt.z) + &m.c * pt.tau,
        ry: -(&m.a * &pt.x) + &m.b * pt.tau,
        rz: -m.g.mul(&pt.x) + &m.h * pt.tau - &pt.s,
        rtau: -m.c.dot(&pt.x) - m.b.dot(&pt.y) - m.h.dot(&pt.z) - pt.kappa,
        rs: DVector::zeros(m.q()),
        rkappa: 0.0,
    }
}

#[derive(Debug, Error)]
enum StepFailure {
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error("no step length above the floor keeps the iterate in the neighborhood")]
    LineSearch,
}

struct Solver<'a> {
    orig: &'a Model,
    model: Model,
    prep: PreprocessState,
    cones: ConeSet,
    settings: &'a SolverSettings,
    stepper: Stepper,
    avoid: bool,
    nu: f64,
    pt: Point,
    kkt_path: Option<KktPath>,
    has_third: bool,
}

fn max_step_scalar(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

impl<'a> Solver<'a> {
    fn log(&self, level: u8, msg: impl FnOnce() -> String) {
        if self.settings.verbose >= level {
            println!("{}", msg());
        }
    }

    fn newton(&mut self, kkt: &Kkt, r: &NewtonRhs, worst: &mut f64) -> Result<Point, StepFailure> {
        let d = kkt.solve(&self.model, &mut self.cones, r)?;
        *worst = worst.max(kkt.residual(&self.model, &mut self.cones, r, &d));
        Ok(d)
    }

    fn nt_step(&mut self) -> Result<IterRecord, StepFailure> {
        let pt = self.pt.clone();
        let (q, n, p) = (self.model.q(), self.model.n(), self.model.p());
        if !self.cones.set_point(pt.s.as_slice()) {
            return Err(StepFailure::Cone(ConeError::Infeasible));
        }
        self.cones.nt_update(pt.s.as_slice(), pt.z.as_slice())?;
        let mu = pt.mu(self.nu);
        let kkt = Kkt::factor(&self.model, &mut self.cones, HessMode::Nt, pt.tau, pt.kappa, self.settings.ir)?;
        self.kkt_path = Some(kkt.path());
        let res = hsde_residual(&self.model, &pt);
        let mut worst: f64 = 0.0;

        let mut rp = NewtonRhs::zeros(n, p, q);
        rp.rx = -&res.rx;
        rp.ry = -&res.ry;
        rp.rz = -&res.rz;
        rp.rtau = -res.rtau;
        rp.rs = -&pt.z;
        rp.rkappa = -pt.tau * pt.kappa;
        let dp = self.newton(&kkt, &rp, &mut worst)?;
        let alpha_p = self.nt_max_step(&pt, &dp);
        let sigma = (1.0 - alpha_p).powi(3);

        let lam = self.cones.lambda();
        let e = self.cones.identity();
        let ws = self.cones.w_inv_t_prod(dp.s.as_slice());
        let wz = self.cones.w_prod(dp.z.as_slice());
        let t = -self.cones.jordan_prod(lam.as_slice(), lam.as_slice()) - self.cones.jordan_prod(ws.as_slice(), wz.as_slice())
            + e * (sigma * mu);
        let qv = self.cones.jordan_div(lam.as_slice(), t.as_slice())?;
        let f = 1.0 - sigma;
        let rc = NewtonRhs {
            rx: -&res.rx * f,
            ry: -&res.ry * f,
            rz: -&res.rz * f,
            rtau: -res.rtau * f,
            rs: self.cones.w_inv_prod(qv.as_slice()),
            rkappa: -pt.tau * pt.kappa - dp.tau * dp.kappa + sigma * mu,
        };
        let d = self.newton(&kkt, &rc, &mut worst)?;
        let alpha = self.nt_max_step(&pt, &d);
        let next = pt.axpy(NT_STEP * alpha, &d);
        self.log(3, || format!("    nt: alpha_pred {alpha_p:.3e}  sigma {sigma:.3e}  alpha {alpha:.3e}  newton res {worst:.2e}"));
        if !(next.tau > 0.0 && next.kappa > 0.0 && self.cones.set_point(next.s.as_slice())) {
            return Err(StepFailure::LineSearch);
        }
        self.pt = next;
        Ok(IterRecord { mu, alpha: NT_STEP * alpha, tau: self.pt.tau, kappa: self.pt.kappa, proximity: 0.0, newton_residual: worst })
    }

    fn nt_max_step(&mut self, pt: &Point, d: &Point) -> f64 {
        let a = self.cones.step_to_boundary(pt.s.as_slice(), d.s.as_slice());
        let b = self.cones.step_to_boundary(pt.z.as_slice(), d.z.as_slice());
        a.min(b).min(max_step_scalar(pt.tau, d.tau)).min(max_step_scalar(pt.kappa, d.kappa)).min(1.0)
    }

    /// Largest proximity value at a loaded interior point.
    fn proximity(&mut self, pt: &Point, mu: f64) -> Result<Vec<f64>, StepFailure> {
        if !self.avoid {
            return Ok(self.cones.proximity(pt.z.as_slice(), mu)?);
        }
        let ConeMatrix::Dense(g) = &self.model.g else { unreachable!("avoidance mode uses an explicit G") };
        Ok(vec![proximity_invhess_mode(&mut self.cones, g, &pt.z, mu)?])
    }

    fn sy_step(&mut self) -> Result<IterRecord, StepFailure> {
        let pt = self.pt.clone();
        let (q, n, p) = (self.model.q(), self.model.n(), self.model.p());
        if !self.cones.set_point(pt.s.as_slice()) {
            return Err(StepFailure::Cone(ConeError::Infeasible));
        }
        let mu = pt.mu(self.nu);
        let kkt = Kkt::factor(&self.model, &mut self.cones, HessMode::Barrier { mu }, pt.tau, pt.kappa, self.settings.ir)?;
        self.kkt_path = Some(kkt.path());
        let res = hsde_residual(&self.model, &pt);
        let grad = self.cones.grad();
        let mut worst: f64 = 0.0;

        let mut rp = NewtonRhs::zeros(n, p, q);
        rp.rx = -&res.rx;
        rp.ry = -&res.ry;
        rp.rz = -&res.rz;
        rp.rtau = -res.rtau;
        rp.rs = -&pt.z;
        rp.rkappa = -pt.tau * pt.kappa;
        let dp = self.newton(&kkt, &rp, &mut worst)?;

        let mut rc = NewtonRhs::zeros(n, p, q);
        rc.rs = -&pt.z - &grad * mu;
        rc.rkappa = -pt.tau * pt.kappa + mu;
        let dc = self.newton(&kkt, &rc, &mut worst)?;

        let zero = Point::zeros(n, p, q);
        let (dpt, dct) = if self.settings.toa && self.has_third {
            let mut r = NewtonRhs::zeros(n, p, q);
            r.rs = self.cones.hess_prod(dp.s.as_slice()) * mu - self.cones.third_dir(dp.s.as_slice()) * (0.5 * mu);
            r.rkappa = -dp.tau * dp.kappa;
            let dpt = self.newton(&kkt, &r, &mut worst)?;
            let mut r = NewtonRhs::zeros(n, p, q);
            r.rs = -self.cones.third_dir(dc.s.as_slice()) * (0.5 * mu);
            r.rkappa = -dc.tau * dc.kappa;
            let dct = self.newton(&kkt, &r, &mut worst)?;
            (dpt, dct)
        } else {
            (zero.clone(), zero)
        };

        let mut alpha: f64 = 1.0;
        let mut trail = vec![];
        loop {
            let b = 1.0 - alpha;
            let cand = pt.axpy(alpha, &dp).axpy(alpha * alpha, &dpt).axpy(b, &dc).axpy(b * b, &dct);
            let ok = cand.tau > 0.0 && cand.kappa > 0.0 && self.cones.set_point(cand.s.as_slice());
            let mu_c = cand.mu(self.nu);
            let per_cone = if ok && mu_c > 0.0 { self.proximity(&cand, mu_c).ok() } else { None };
            let prox = per_cone.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max));
            trail.push((alpha, prox));
            if let Some(pv) = prox {
                if pv <= ETA {
                    let trail_s = trail
                        .iter()
                        .map(|(a, p)| format!("{a:.3}:{}", p.map_or("inf".into(), |v| format!("{v:.3}"))))
                        .collect::<Vec<_>>()
                        .join(" ");
                    self.log(3, || {
                        let cones: Vec<String> = per_cone.iter().flatten().map(|v| format!("{v:.3}")).collect();
                        format!("    line search: {trail_s}  newton res {worst:.2e}\n    proximity per cone: {}", cones.join(" "))
                    });
                    self.pt = cand;
                    return Ok(IterRecord { mu, alpha, tau: self.pt.tau, kappa: self.pt.kappa, proximity: pv, newton_residual: worst });
                }
            }
            if alpha <= ALPHA_MIN {
                self.cones.set_point(pt.s.as_slice());
                return Err(StepFailure::LineSearch);
            }
            alpha = (alpha * BACKTRACK).max(ALPHA_MIN);
        }
    }

    fn banner(&self) {
        let m = self.orig;
        let complex = m.cones.iter().any(|c| c.is_complex());
        let symmetric = m.cones.iter().all(|c| c.is_symmetric());
        println!("{}", "=".repeat(68));
        println!("{:^68}", format!("qconic v{} - conic interior-point solver", env!("CARGO_PKG_VERSION")));
        println!("{}", "=".repeat(68));
        println!("Problem summary:");
        println!("        no. vars:     {:<24}  barr. par:    {}", m.n(), fmt_num(m.nu()));
        println!("        no. constr:   {:<24}  symmetric:    {}", m.p(), symmetric);
        println!("        cone dim:     {:<24}  complex:      {}", m.q(), complex);
        println!("        no. cones:    {:<24}  sparse:       {}", m.cones.len(), false);
        println!();
    }

    fn run(mut self, start: Instant) -> SolveReport {
        let st = self.settings;
        if st.verbose >= 1 {
            self.banner();
        }
        self.log(2, || {
            format!(
                "{:>4}  {:>10}  {:>10}  {:>14}  {:>14}  {:>9}  {:>9}  {:>9}  {:>8}",
                "iter", "mu", "k/t", "p_obj", "d_obj", "gap", "p_feas", "d_feas", "step"
            )
        });
        let ih0 = self.cones.inv_hess_calls();
        let mut history: Vec<IterRecord> = vec![];
        let mut mus: Vec<f64> = vec![];
        let mut floor_hits = 0;
        let mut iter = 0;
        let (status, exit, ms) = loop {
            let rec = self.prep.recover(&self.pt);
            let ms = measure(self.orig, &rec.x, &rec.y, &rec.z, &rec.s, self.pt.tau);
            let mu = self.pt.mu(self.nu);
            self.log(2, || {
                format!(
                    "{:>4}  {:>10}  {:>10}  {:>14}  {:>14}  {:>9}  {:>9}  {:>9}  {:>8}",
                    iter,
                    sci(mu, 3),
                    sci(self.pt.kappa / self.pt.tau, 3),
                    sci(ms.p_obj, 6),
                    sci(ms.d_obj, 6),
                    sci(ms.opt_gap, 2),
                    sci(ms.p_feas, 2),
                    sci(ms.d_feas, 2),
                    history.last().map_or("".into(), |r| format!("{:.3}", r.alpha))
                )
            });
            if let Some(s) = classify(&ms, st, 1.0) {
                if certificate_holds(self.orig, s, rec, self.pt.tau, st.tol_infeas) {
                    break (s, ExitStatus::Solved, ms);
                }
                self.log(2, || "certificate fails after normalization: continuing".into());
            }
            let stalled = mus.len() >= 5 && mu > 0.99 * mus[mus.len() - 5];
            if stalled || floor_hits >= 2 {
                self.log(2, || "stalled: evaluating near statuses".into());
                break (SolStatus::Unknown, ExitStatus::NumericalFailure, ms);
            }
            if iter >= st.max_iter {
                break (SolStatus::Unknown, ExitStatus::MaxIter, ms);
            }
            if start.elapsed().as_secs_f64() >= st.max_time {
                break (SolStatus::Unknown, ExitStatus::MaxTime, ms);
            }
            mus.push(mu);
            let step = match self.stepper {
                Stepper::NesterovTodd => self.nt_step(),
                Stepper::Combined => self.sy_step(),
            };
            match step {
                Ok(r) => {
                    if r.alpha <= ALPHA_MIN {
                        floor_hits += 1;
                    }
                    history.push(r);
                }
                Err(e) => {
                    self.log(2, || format!("step failed: {e}"));
                    break (SolStatus::Unknown, ExitStatus::NumericalFailure, ms);
                }
            }
            iter += 1;
        };
        let status = if status == SolStatus::Unknown {
            classify(&ms, st, st.tol_near).unwrap_or(SolStatus::Unknown)
        } else {
            status
        };
        let stats = SolveStats {
            stepper: self.stepper,
            invhess_avoided: self.avoid,
            kkt_path: self.kkt_path,
            inv_hess_calls_init: ih0,
            inv_hess_calls_after_init: self.cones.inv_hess_calls() - ih0,
            history,
        };
        let report = self.report(status, exit, iter, start, ms, stats);
        if st.verbose >= 1 {
            print_summary(&report);
        }
        report
    }

    fn report(&self, status: SolStatus, exit: ExitStatus, iter: usize, start: Instant, ms: Measures, stats: SolveStats) -> SolveReport {
        let (x, y, z, s) = reported_point(self.orig, status, self.prep.recover(&self.pt), self.pt.tau);
        let (p_obj, d_obj) = certificate_objectives(status).unwrap_or((ms.p_obj, ms.d_obj));
        SolveReport {
            x_opt: x,
            y_opt: y,
            z_opt: z,
            s_opt: s,
            sol_status: status,
            exit_status: exit,
            num_iter: iter,
            solve_time: start.elapsed().as_secs_f64(),
            p_obj,
            d_obj,
            opt_gap: ms.opt_gap,
            p_feas: ms.p_feas,
            d_feas: ms.d_feas,
            stats,
        }
    }
}

/// The point handed back to the caller: the solution scaled by `1 / tau`, or an
/// infeasibility certificate normalized to `b^T y + h^T z = -1` (resp. `c^T x = -1`).
fn reported_point(m: &Model, status: SolStatus, rec: Recovered, tau: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    let (n, p, q) = (m.n(), m.p(), m.q());
    match status {
        SolStatus::PrimalInfeasible | SolStatus::NearPrimalInfeasible => {
            let k = -(m.b.dot(&rec.y) + m.h.dot(&rec.z));
            (DVector::zeros(n), rec.y / k, rec.z / k, DVector::zeros(q))
        }
        SolStatus::DualInfeasible | SolStatus::NearDualInfeasible => {
            let k = -m.c.dot(&rec.x);
            (rec.x / k, DVector::zeros(p), DVector::zeros(q), rec.s / k)
        }
        _ => (rec.x / tau, rec.y / tau, rec.z / tau, rec.s / tau),
    }
}

/// False when rounding in the normalization pushes an exact infeasibility
/// certificate back over the tolerance.
fn certificate_holds(m: &Model, status: SolStatus, rec: Recovered, tau: f64, tol: f64) -> bool {
    let (x, y, z, s) = reported_point(m, status, rec, tau);
    match status {
        SolStatus::PrimalInfeasible => (m.a.tr_mul(&y) + m.g.tr_mul(&z)).amax() <= tol,
        SolStatus::DualInfeasible => (&m.a * &x).amax().max(hermitian_part(&m.cones, &(m.g.mul(&x) + s)).amax()) <= tol,
        _ => true,
    }
}

/// `|| (G^T H G)^{-1/2} G^T (z / mu + grad F(s)) ||` with the point `s` already loaded.
pub fn proximity_invhess_mode(cones: &mut ConeSet, g: &DMatrix<f64>, z: &DVector<f64>, mu: f64) -> Result<f64, KktError> {
    let (k, _) = gram(cones, HessMode::Barrier { mu: 1.0 }, g);
    let fac = cholesky_retry(&k).map_err(|_| KktError::Factorization)?;
    let r = g.tr_mul(&(z / mu + cones.grad()));
    Ok(r.dot(&fac.solve(&r)).max(0.0).sqrt())
}

/// Objectives of an infeasible (`+inf`) or unbounded (`-inf`) problem.
fn certificate_objectives(status: SolStatus) -> Option<(f64, f64)> {
    match status {
        SolStatus::PrimalInfeasible | SolStatus::NearPrimalInfeasible => Some((f64::INFINITY, f64::INFINITY)),
        SolStatus::DualInfeasible | SolStatus::NearDualInfeasible => Some((f64::NEG_INFINITY, f64::NEG_INFINITY)),
        _ => None,
    }
}

/// C-style scientific notation with a signed two-digit exponent, e.g. `2.77e+00`.
pub fn sci(v: f64, prec: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.prec$e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Prints the closing summary block.
pub fn print_summary(r: &SolveReport) {
    println!();
    println!("Solution summary");
    println!("        sol. status:  {:<24}  num. iter:    {}", r.sol_status, r.num_iter);
    println!("        exit status:  {:<24}  solve time:   {:.3}", r.exit_status, r.solve_time);
    println!("        primal obj:   {:<24}  primal feas:  {}", sci(r.p_obj, 12), sci(r.p_feas, 2));
    println!("        dual obj:     {:<24}  dual feas:    {}", sci(r.d_obj, 12), sci(r.d_feas, 2));
    println!();
}

/// Report for a model with an empty equality row whose right-hand side is
/// nonzero: `y = -sign(b_i) e_i` certifies infeasibility outright.
fn trivially_infeasible(model: &Model, row: usize, start: Instant, stepper: Stepper) -> SolveReport {
    let mut y = DVector::zeros(model.p());
    y[row] = -model.b[row].signum() / model.b[row].abs();
    let x = DVector::zeros(model.n());
    let z = DVector::zeros(model.q());
    let ms = measure(model, &x, &y, &z, &DVector::zeros(model.q()), 1.0);
    SolveReport {
        x_opt: x,
        y_opt: y,
        z_opt: z.clone(),
        s_opt: z,
        sol_status: SolStatus::PrimalInfeasible,
        exit_status: ExitStatus::Solved,
        num_iter: 0,
        solve_time: start.elapsed().as_secs_f64(),
        p_obj: f64::INFINITY,
        d_obj: f64::INFINITY,
        opt_gap: ms.opt_gap,
        p_feas: ms.p_feas,
        d_feas: ms.d_feas,
        stats: SolveStats {
            stepper,
            invhess_avoided: false,
            kkt_path: None,
            inv_hess_calls_init: 0,
            inv_hess_calls_after_init: 0,
            history: vec![],
        },
    }
}

/// Whether the inverse-Hessian-free formulation applies to `model`.
fn wants_avoidance(model: &Model, settings: &SolverSettings, stepper: Stepper) -> bool {
    if stepper == Stepper::NesterovTodd {
        return false;
    }
    let requested = match settings.use_invhess {
        Some(true) => false,
        Some(false) => true,
        None => !model.g.is_neg_identity() && model.cones.iter().any(|c| c.prefers_invhess_avoidance()),
    };
    if !requested {
        return false;
    }
    let g = model.g.to_dense();
    let mut gh = g.clone();
    for j in 0..g.ncols() {
        gh.set_column(j, &hermitian_part(&model.cones, &g.column(j).into_owned()));
    }
    full_column_rank(&gh)
}

/// Solves `model` and reports in its original coordinates.
pub fn solve(model: &Model, settings: &SolverSettings) -> SolveReport {
    let start = Instant::now();
    let stepper = if model.cones.iter().all(|c| c.is_symmetric()) { Stepper::NesterovTodd } else { Stepper::Combined };
    let (mut pm, mut prep) = preprocess(model);
    if let Some(row) = prep.inconsistent_row {
        let r = trivially_infeasible(model, row, start, stepper);
        if settings.verbose >= 1 {
            print_summary(&r);
        }
        return r;
    }
    let mut cones = ConeSet::new(&pm.cones).expect("validated cones");
    let avoid = wants_avoidance(&pm, settings, stepper);
    if avoid {
        pm = eliminate_h(&pm, &mut prep);
        let (s0, _) = cones.init_point();
        pm = repair_s0_image(&pm, &s0, &mut prep);
    }
    let mut pt = initial_point(&pm, &mut cones);
    if let Some(p0) = &settings.init_pnt {
        let cand = prep.forward(p0);
        if cand.tau > 0.0 && cand.kappa > 0.0 && cones.set_point(cand.s.as_slice()) {
            pt = cand;
        } else if settings.verbose >= 1 {
            println!("init_pnt is not interior; using the default initial point");
        }
    }
    let has_third = {
        let mut any = false;
        for i in 0..cones.len() {
            let r = cones.range(i);
            let c = cones.cone(i);
            c.set_point(&pt.s.as_slice()[r.clone()]);
            any |= c.third_dir(&vec![0.0; r.len()]).is_some();
        }
        any
    };
    let nu = cones.nu();
    let solver = Solver {
        orig: model,
        model: pm,
        prep,
        cones,
        settings,
        stepper,
        avoid,
        nu,
        pt,
        kkt_path: None,
        has_third,
    };
    solver.run(start)
}
