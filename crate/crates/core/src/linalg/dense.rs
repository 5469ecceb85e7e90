use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{eig_factor, LinalgError, Scalar};

/// `(M + M^†) / 2`.
pub fn herm_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lift(0.5);
    (m + m.adjoint()) * half
}

/// `A X A^†`.
pub fn congruence<T: Scalar>(a: &DMatrix<T>, x: &DMatrix<T>) -> DMatrix<T> {
    a * x * a.adjoint()
}

/// Real inner product `Re tr(A B^†)`, equal to the dot product of the vectorizations.
pub fn inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re() * y.re() + x.im() * y.im()).sum()
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn inv_pd<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>, LinalgError> {
    let c = Cholesky::new(m.clone()).ok_or(LinalgError::NotPositiveDefinite)?;
    Ok(super::herm_part(&c.inverse()))
}

/// Principal square root and inverse square root of a positive definite matrix.
pub fn sqrt_pd<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>), LinalgError> {
    let e = eig_factor(m)?;
    if e.lam.iter().any(|&l| l <= 0.0) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok((e.apply(|l| l.sqrt()), e.apply(|l| 1.0 / l.sqrt())))
}

/// Cholesky factor of a symmetric positive definite real matrix.
#[derive(Debug, Clone)]
pub struct PdFactor {
    chol: Cholesky<f64, Dyn>,
    pub regularized: bool,
}

impl PdFactor {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }
}

/// Cholesky of the symmetrized matrix, retrying once with a
/// `1e-12 * trace / n` diagonal shift when the first attempt fails.
pub fn cholesky_retry(m: &DMatrix<f64>) -> Result<PdFactor, LinalgError> {
    let sym = (m + m.transpose()) * 0.5;
    if sym.nrows() == 0 {
        let chol = Cholesky::new(sym).ok_or(LinalgError::NotPositiveDefinite)?;
        return Ok(PdFactor { chol, regularized: false });
    }
    if let Some(chol) = Cholesky::new(sym.clone()) {
        return Ok(PdFactor { chol, regularized: false });
    }
    let n = sym.nrows();
    let tr = sym.trace().abs().max(f64::MIN_POSITIVE);
    let shift = 1e-12 * tr / n as f64;
    let reg = sym + DMatrix::identity(n, n) * shift;
    Cholesky::new(reg)
        .map(|chol| PdFactor { chol, regularized: true })
        .ok_or(LinalgError::NotPositiveDefinite)
}
