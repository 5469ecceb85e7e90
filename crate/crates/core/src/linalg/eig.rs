use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{herm_part, LinalgError, Scalar};

/// Eigendecomposition `X = U diag(lam) U^†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eig<T: Scalar> {
    pub u: DMatrix<T>,
    pub lam: DVector<f64>,
}

pub fn eig_factor<T: Scalar>(m: &DMatrix<T>) -> Result<Eig<T>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if m.iter().any(|x| !x.re().is_finite() || !x.im().is_finite()) {
        return Err(LinalgError::Domain { func: "eig", value: f64::NAN });
    }
    let se = SymmetricEigen::new(herm_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let lam = DVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
    let u = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok(Eig { u, lam })
}

impl<T: Scalar> Eig<T> {
    pub fn new(m: &DMatrix<T>) -> Result<Self, LinalgError> {
        eig_factor(m)
    }

    pub fn dim(&self) -> usize {
        self.lam.len()
    }

    /// `U diag(f(lam)) U^†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<T> {
        let d: Vec<f64> = self.lam.iter().map(|&l| f(l)).collect();
        self.rebuild(&d)
    }

    pub fn rebuild(&self, d: &[f64]) -> DMatrix<T> {
        let mut ud = self.u.clone();
        for (j, &dj) in d.iter().enumerate() {
            let s = T::lift(dj);
            for i in 0..ud.nrows() {
                ud[(i, j)] *= s;
            }
        }
        herm_part(&(ud * self.u.adjoint()))
    }

    /// `U^† V U`.
    pub fn to_basis(&self, v: &DMatrix<T>) -> DMatrix<T> {
        self.u.adjoint() * v * &self.u
    }

    /// `U V U^†`.
    pub fn from_basis(&self, v: &DMatrix<T>) -> DMatrix<T> {
        &self.u * v * self.u.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.lam.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
