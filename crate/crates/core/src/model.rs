//! Problem container, preprocessing and solution recovery.
//!
//! A model is `min c^T x + offset` subject to `b - A x = 0` and `h - G x in K`,
//! where `K` is the Cartesian product of the listed cones.

use nalgebra::{DMatrix, DVector, SVD};
use thiserror::Error;

use crate::cones::{ConeError, ConeSet, ConeSpec};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid cone {index}: {source}")]
    InvalidCone { index: usize, source: ConeError },
}

/// The cone matrix `G`: either the default `-I` or an explicit dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeMatrix {
    NegIdentity(usize),
    Dense(DMatrix<f64>),
}

impl ConeMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            ConeMatrix::NegIdentity(q) => *q,
            ConeMatrix::Dense(g) => g.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            ConeMatrix::NegIdentity(q) => *q,
            ConeMatrix::Dense(g) => g.ncols(),
        }
    }

    pub fn is_neg_identity(&self) -> bool {
        matches!(self, ConeMatrix::NegIdentity(_))
    }

    /// `G x`.
    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConeMatrix::NegIdentity(_) => -x,
            ConeMatrix::Dense(g) => g * x,
        }
    }

    /// `G^T z`.
    pub fn tr_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            ConeMatrix::NegIdentity(_) => -z,
            ConeMatrix::Dense(g) => g.tr_mul(z),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ConeMatrix::NegIdentity(q) => -DMatrix::identity(*q, *q),
            ConeMatrix::Dense(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: ConeMatrix,
    pub h: DVector<f64>,
    pub cones: Vec<ConeSpec>,
    pub offset: f64,
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected != got {
        return Err(ModelError::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

fn check_finite<'a>(what: &'static str, it: impl IntoIterator<Item = &'a f64>) -> Result<(), ModelError> {
    if it.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what))
    }
}

impl Model {
    /// Validates dimensions and cone parameters. `a` may have zero rows; `g = None`
    /// means `G = -I` and `h = None` means `h = 0`.
    pub fn new(
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        g: Option<DMatrix<f64>>,
        h: Option<DVector<f64>>,
        cones: Vec<ConeSpec>,
        offset: f64,
    ) -> Result<Self, ModelError> {
        let n = c.len();
        let q: usize = cones.iter().map(ConeSpec::dim).sum();
        for (index, spec) in cones.iter().enumerate() {
            spec.validate().map_err(|source| ModelError::InvalidCone { index, source })?;
        }
        check_len("A columns", n, a.ncols())?;
        check_len("b", a.nrows(), b.len())?;
        let g = match g {
            None => {
                check_len("cone dimension (G = -I)", n, q)?;
                ConeMatrix::NegIdentity(q)
            }
            Some(g) => {
                check_len("G rows", q, g.nrows())?;
                check_len("G columns", n, g.ncols())?;
                ConeMatrix::Dense(g)
            }
        };
        let h = h.unwrap_or_else(|| DVector::zeros(q));
        check_len("h", q, h.len())?;
        check_finite("c", c.iter())?;
        check_finite("A", a.iter())?;
        check_finite("b", b.iter())?;
        check_finite("h", h.iter())?;
        if let ConeMatrix::Dense(m) = &g {
            check_finite("G", m.iter())?;
        }
        if !offset.is_finite() {
            return Err(ModelError::NonFinite("offset"));
        }
        Ok(Self { c, a, b, g, h, cones, offset })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> usize {
        self.h.len()
    }

    pub fn nu(&self) -> f64 {
        self.cones.iter().map(ConeSpec::nu).sum()
    }

    /// Start offset of every cone block in `s` and `z`.
    pub fn cone_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut at = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = at..at + c.dim();
                at = r.end;
                r
            })
            .collect()
    }
}

/// Projects a cone-space vector onto the Hermitian part of every matrix slice.
pub fn hermitian_part(cones: &[ConeSpec], v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    let mut at = 0;
    for spec in cones {
        let layout = spec.build().expect("validated cone").layout();
        let d = spec.dim();
        let pr = layout.project(&v.as_slice()[at..at + d]);
        out.rows_mut(at, d).copy_from(&pr);
        at += d;
    }
    out
}

/// Drops the anti-Hermitian parts of the data acting on matrix slices, which
/// the cones never see.
fn symmetrize(model: &Model) -> Model {
    let mut m = model.clone();
    m.h = hermitian_part(&m.cones, &m.h);
    match &mut m.g {
        ConeMatrix::Dense(g) => {
            for j in 0..g.ncols() {
                let col = hermitian_part(&model.cones, &g.column(j).into_owned());
                g.set_column(j, &col);
            }
        }
        ConeMatrix::NegIdentity(_) => {
            m.c = hermitian_part(&m.cones, &m.c);
            for i in 0..m.a.nrows() {
                let row = hermitian_part(&model.cones, &m.a.row(i).transpose());
                m.a.set_row(i, &row.transpose());
            }
        }
    }
    m
}

/// An iterate of the homogeneous embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    pub tau: f64,
    pub kappa: f64,
}

impl Point {
    pub fn zeros(n: usize, p: usize, q: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            y: DVector::zeros(p),
            z: DVector::zeros(q),
            s: DVector::zeros(q),
            tau: 0.0,
            kappa: 0.0,
        }
    }

    /// `self + a * d`.
    pub fn axpy(&self, a: f64, d: &Point) -> Point {
        Point {
            x: &self.x + &d.x * a,
            y: &self.y + &d.y * a,
            z: &self.z + &d.z * a,
            s: &self.s + &d.s * a,
            tau: self.tau + a * d.tau,
            kappa: self.kappa + a * d.kappa,
        }
    }

    pub fn scale(&self, a: f64) -> Point {
        Point::zeros(self.x.len(), self.y.len(), self.z.len()).axpy(a, self)
    }

    pub fn norm_inf(&self) -> f64 {
        [self.x.amax(), self.y.amax(), self.z.amax(), self.s.amax(), self.tau.abs(), self.kappa.abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// `(s^T z + tau kappa) / (nu + 1)`.
    pub fn mu(&self, nu: f64) -> f64 {
        (self.s.dot(&self.z) + self.tau * self.kappa) / (nu + 1.0)
    }
}

/// `tau = kappa = 1`, `x = y = 0` and `s = z` from each cone's central initial point.
pub fn initial_point(model: &Model, cones: &mut ConeSet) -> Point {
    let (s, z) = cones.init_point();
    Point { x: DVector::zeros(model.n()), y: DVector::zeros(model.p()), z, s, tau: 1.0, kappa: 1.0 }
}

/// A change of variables applied after equilibration, undone in reverse order.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// `x = x' + shift * tau` with `G shift = h`.
    ShiftH { shift: DVector<f64> },
    /// One appended variable fixed to `value` by one appended equality row.
    AppendedColumn { value: f64 },
}

/// Everything needed to map a solution of the preprocessed model back.
#[derive(Debug, Clone)]
pub struct PreprocessState {
    /// `x = col_scale .* x~`.
    pub col_scale: DVector<f64>,
    /// Scale of each kept row of `A`: `y[kept[i]] = a_row_scale[i] * y~[i]`.
    pub a_row_scale: DVector<f64>,
    /// `z = g_row_scale .* z~` and `s = s~ ./ g_row_scale`; uniform per cone block.
    pub g_row_scale: DVector<f64>,
    /// Original indices of the rows of `A` that were kept.
    pub kept_rows: Vec<usize>,
    /// Structurally empty rows of `A` with zero right-hand side.
    pub removed_rows: Vec<usize>,
    /// An empty row of `A` whose right-hand side is nonzero, if any.
    pub inconsistent_row: Option<usize>,
    pub p_orig: usize,
    pub n_orig: usize,
    pub transforms: Vec<Transform>,
}

/// Raw homogeneous quantities `(x, y, z, s)` with a scale `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
}

impl PreprocessState {
    pub fn identity(model: &Model) -> Self {
        Self {
            col_scale: DVector::from_element(model.n(), 1.0),
            a_row_scale: DVector::from_element(model.p(), 1.0),
            g_row_scale: DVector::from_element(model.q(), 1.0),
            kept_rows: (0..model.p()).collect(),
            removed_rows: vec![],
            inconsistent_row: None,
            p_orig: model.p(),
            n_orig: model.n(),
            transforms: vec![],
        }
    }

    /// Maps an iterate of the preprocessed (and transformed) model to the original one.
    pub fn recover(&self, pt: &Point) -> Recovered {
        let mut x = pt.x.clone();
        let mut y = pt.y.clone();
        for t in self.transforms.iter().rev() {
            match t {
                Transform::ShiftH { shift } => x += shift * pt.tau,
                Transform::AppendedColumn { .. } => {
                    x = x.rows(0, x.len() - 1).into_owned();
                    y = y.rows(0, y.len() - 1).into_owned();
                }
            }
        }
        let x = x.component_mul(&self.col_scale);
        let mut y_full = DVector::zeros(self.p_orig);
        for (i, &r) in self.kept_rows.iter().enumerate() {
            y_full[r] = self.a_row_scale[i] * y[i];
        }
        let z = pt.z.component_mul(&self.g_row_scale);
        let s = pt.s.component_div(&self.g_row_scale);
        Recovered { x, y: y_full, z, s }
    }
}

impl PreprocessState {
    /// Maps an iterate of the original model into the preprocessed coordinates.
    pub fn forward(&self, pt: &Point) -> Point {
        let mut x = pt.x.component_div(&self.col_scale);
        let mut y = DVector::from_iterator(
            self.kept_rows.len(),
            self.kept_rows.iter().enumerate().map(|(i, &r)| pt.y[r] / self.a_row_scale[i]),
        );
        for t in &self.transforms {
            match t {
                Transform::ShiftH { shift } => x -= shift * pt.tau,
                Transform::AppendedColumn { value } => {
                    x = x.push(value * pt.tau);
                    y = y.push(0.0);
                }
            }
        }
        Point {
            x,
            y,
            z: pt.z.component_div(&self.g_row_scale),
            s: pt.s.component_mul(&self.g_row_scale),
            tau: pt.tau,
            kappa: pt.kappa,
        }
    }
}

fn pow2(v: f64) -> f64 {
    if !(v.is_finite() && v > 0.0) {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

/// Symmetrizes matrix-slice data, removes empty rows of `A` and equilibrates `[A; G]` by alternating row and
/// column infinity-norm scaling (two passes, power-of-two factors).
///
/// This is a stand-in for a more elaborate rescaling recipe. Rows of `G` share
/// one factor per cone block so cone membership is preserved. With `G = -I`
/// only the rows of `A` are scaled, which keeps the identity structure.
pub fn preprocess(model: &Model) -> (Model, PreprocessState) {
    let sym = symmetrize(model);
    let model = &sym;
    let mut st = PreprocessState::identity(model);
    let (n, p) = (model.n(), model.p());
    let mut kept = vec![];
    for i in 0..p {
        if model.a.row(i).iter().all(|&v| v == 0.0) {
            if model.b[i] == 0.0 {
                st.removed_rows.push(i);
            } else {
                st.inconsistent_row.get_or_insert(i);
                kept.push(i);
            }
        } else {
            kept.push(i);
        }
    }
    let mut a = model.a.select_rows(kept.iter());
    let mut b = model.b.select_rows(kept.iter());
    st.kept_rows = kept;
    let mut ra = DVector::from_element(a.nrows(), 1.0);
    let mut rg = DVector::from_element(model.q(), 1.0);
    let mut cs = DVector::from_element(n, 1.0);
    let mut g = model.g.clone();
    let ranges = model.cone_ranges();
    for _ in 0..2 {
        for i in 0..a.nrows() {
            let f = pow2(1.0 / a.row(i).amax().sqrt());
            a.row_mut(i).scale_mut(f);
            ra[i] *= f;
        }
        if let ConeMatrix::Dense(gm) = &mut g {
            for r in &ranges {
                let f = pow2(1.0 / gm.rows(r.start, r.len()).amax().sqrt());
                gm.rows_mut(r.start, r.len()).scale_mut(f);
                rg.rows_mut(r.start, r.len()).scale_mut(f);
            }
            for j in 0..n {
                let m = a.column(j).amax().max(gm.column(j).amax());
                let f = pow2(1.0 / m.sqrt());
                a.column_mut(j).scale_mut(f);
                gm.column_mut(j).scale_mut(f);
                cs[j] *= f;
            }
        }
    }
    b.component_mul_assign(&ra);
    let h = model.h.component_mul(&rg);
    let c = model.c.component_mul(&cs);
    st.a_row_scale = ra;
    st.g_row_scale = rg;
    st.col_scale = cs;
    (Model { c, a, b, g, h, cones: model.cones.clone(), offset: model.offset }, st)
}

/// True when `G` has full column rank under the threshold `1e-10 * |G|_2`.
pub fn full_column_rank(g: &DMatrix<f64>) -> bool {
    if g.ncols() > g.nrows() {
        return false;
    }
    if g.ncols() == 0 {
        return true;
    }
    let sv = SVD::new(g.clone(), false, false).singular_values;
    let max = sv.max();
    max > 0.0 && sv.min() > 1e-10 * max
}

/// Least-squares solution `G^+ v` and whether `v` lies in the range of `G`.
fn range_solve(g: &DMatrix<f64>, v: &DVector<f64>) -> (DVector<f64>, bool) {
    let svd = SVD::new(g.clone(), true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let x = svd.solve(v, tol).expect("SVD with both factors");
    let res = (g * &x - v).amax();
    (x, res <= 1e-10 * (1.0 + v.amax()))
}

fn append_fixed_column(model: &Model, col: DVector<f64>, value: f64) -> Model {
    let (n, p) = (model.n(), model.p());
    let ConeMatrix::Dense(g) = &model.g else { unreachable!("transform needs an explicit G") };
    let mut g2 = g.clone().insert_column(n, 0.0);
    g2.set_column(n, &col);
    let mut a2 = model.a.clone().insert_column(n, 0.0).insert_row(p, 0.0);
    a2[(p, n)] = 1.0;
    Model {
        c: model.c.clone().insert_row(n, 0.0),
        a: a2,
        b: model.b.clone().insert_row(p, value),
        g: ConeMatrix::Dense(g2),
        h: model.h.clone(),
        cones: model.cones.clone(),
        offset: model.offset,
    }
}

/// Rewrites the model so that `h = 0`: by a pseudo-inverse shift when `h` is in
/// the range of `G`, otherwise by a homogenizing variable fixed to one.
pub fn eliminate_h(model: &Model, st: &mut PreprocessState) -> Model {
    if model.h.iter().all(|&v| v == 0.0) {
        return model.clone();
    }
    let g = model.g.to_dense();
    let (shift, in_range) = range_solve(&g, &model.h);
    if in_range {
        let mut m = model.clone();
        m.offset += model.c.dot(&shift);
        m.b = &model.b - &model.a * &shift;
        m.h = DVector::zeros(model.q());
        m.g = ConeMatrix::Dense(g);
        st.transforms.push(Transform::ShiftH { shift });
        m
    } else {
        let mut base = model.clone();
        base.g = ConeMatrix::Dense(g);
        let mut m = append_fixed_column(&base, -&model.h, 1.0);
        m.h = DVector::zeros(model.q());
        st.transforms.push(Transform::AppendedColumn { value: 1.0 });
        m
    }
}

/// Ensures `s0` lies in the range of `G` by appending a variable fixed to zero
/// whose column is `-s0`.
pub fn repair_s0_image(model: &Model, s0: &DVector<f64>, st: &mut PreprocessState) -> Model {
    let g = model.g.to_dense();
    let (_, in_range) = range_solve(&g, s0);
    let mut base = model.clone();
    base.g = ConeMatrix::Dense(g);
    if in_range {
        return base;
    }
    st.transforms.push(Transform::AppendedColumn { value: 0.0 });
    append_fixed_column(&base, -s0, 0.0)
}
